/** Wire types mirroring the gateway's JSON payloads, plus client-only state.
 *
 * The view never recomputes server numbers; everything displayed comes
 * byte-for-byte from these payloads.
 */

export interface SimpleEventPayload {
  id: string;
  feedId: string;
  modality: string;
  classLabel: string;
  confidence: number;
  timestamp: number;
  location: { x: number; y: number };
  partner: string;
  context: string;
}

export interface FrequencyUpdatePayload {
  feedId: string;
  classLabel: string;
  context: string;
  count: number;
  suppressed: boolean;
}

export interface FrequencyRow {
  class: string;
  count: number;
  rate: number;
}

export interface MarkingPayload {
  feedId: string;
  classLabel: string;
  context: string;
  markedBy?: string;
  markedAt?: number;
}

export interface MarkingChangedPayload {
  feedId: string;
  classLabel: string;
  context: string;
  marked: boolean;
  version: number;
}

export interface ConstituentRef {
  role: string;
  eventId: string;
}

export interface DetectionPayload {
  id: string;
  definitionName: string;
  intervalStart: number;
  intervalEnd: number;
  location: { x: number; y: number };
  probability: number;
  constituentEventIds: ConstituentRef[];
  emittedAt: number;
}

export interface ConstraintCheck {
  kind: "temporal" | "spatial" | "count";
  actual: number;
  bound: number;
  satisfied: boolean;
}

export interface ExplanationPayload {
  detectionId: string;
  constituents: {
    eventId: string;
    role: string;
    classLabel: string;
    confidence: number;
    feedId: string;
    partner: string;
  }[];
  constraintChecks: ConstraintCheck[];
  probabilityTerms: { eventId: string; confidence: number }[];
  product: number;
  narrative: string;
}

export interface ConstituentSpecJson {
  matcher: string;
  matcherKind: "class" | "concept";
  role: "initiator" | "terminator" | "supporting";
  minCount: number;
}

export interface DefinitionJson {
  name: string;
  constituents: ConstituentSpecJson[];
  windowSeconds: number;
  radiusMeters: number;
  enabled: boolean;
}

export interface CompiledDefinition extends DefinitionJson {
  fragment: string;
  checksum: string;
}

export interface PaletteJson {
  name: string;
  version: number;
  concepts: { name: string; parent: string | null; propertySchema: unknown[] }[];
  relations: { name: string; domain: string; range: string }[];
}

export type StreamKind =
  | "simple_event"
  | "frequency_update"
  | "detection"
  | "marking_changed"
  | "definition_changed";

export interface StreamMessage {
  kind: StreamKind;
  sequence: number;
  payload: unknown;
}

export interface RunSummary {
  scenario: string;
  seed: number;
  events: number;
  suppressed: number;
  detections: number;
  byDefinition: Record<string, number>;
}
