/** Definition-builder model: palette/form driven construction of a
 * complex-event definition, with the same validation surface the server
 * applies so submit can be disabled with a reason before any round trip. */

import type { ConstituentSpecJson, DefinitionJson } from "./types";

export interface BuilderState {
  name: string;
  windowSeconds: number;
  radiusMeters: number;
  constituents: ConstituentSpecJson[];
}

const IDENT = /^[A-Za-z][A-Za-z0-9_]*$/;

export function emptyBuilder(): BuilderState {
  return { name: "", windowSeconds: 300, radiusMeters: 500, constituents: [] };
}

export function addConstituent(
  state: BuilderState,
  matcher: string,
  role: ConstituentSpecJson["role"],
  matcherKind: ConstituentSpecJson["matcherKind"] = "class",
  minCount = 1,
): BuilderState {
  return {
    ...state,
    constituents: [...state.constituents, { matcher, matcherKind, role, minCount }],
  };
}

export function removeConstituent(state: BuilderState, index: number): BuilderState {
  return {
    ...state,
    constituents: state.constituents.filter((_, i) => i !== index),
  };
}

/** Reasons the definition cannot be submitted yet; empty means ready. */
export function submitBlockers(state: BuilderState): string[] {
  const blockers: string[] = [];
  if (!IDENT.test(state.name)) {
    blockers.push("name must be a letter followed by letters, digits or _");
  }
  if (!state.constituents.some((c) => c.role === "initiator")) {
    blockers.push("missing initiator");
  }
  if (!state.constituents.some((c) => c.role === "terminator")) {
    blockers.push("missing terminator");
  }
  for (const [index, constituent] of state.constituents.entries()) {
    if (!IDENT.test(constituent.matcher)) {
      blockers.push(`constituent ${index + 1}: matcher must be an identifier`);
    }
    if (!(Number.isInteger(constituent.minCount) && constituent.minCount >= 1)) {
      blockers.push(`constituent ${index + 1}: minCount must be a positive integer`);
    }
  }
  if (!(state.windowSeconds > 0)) blockers.push("window must be > 0 seconds");
  if (!(state.radiusMeters > 0)) blockers.push("radius must be > 0 meters");
  return blockers;
}

export function toDefinition(state: BuilderState): DefinitionJson {
  const blockers = submitBlockers(state);
  if (blockers.length) {
    throw new Error(`definition not ready: ${blockers.join("; ")}`);
  }
  return {
    name: state.name,
    constituents: state.constituents,
    windowSeconds: state.windowSeconds,
    radiusMeters: state.radiusMeters,
    enabled: true,
  };
}
