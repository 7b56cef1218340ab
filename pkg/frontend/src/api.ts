/** Typed client for the gateway HTTP API. All mutations round-trip here;
 * the UI holds no truth of its own. */

import type {
  CompiledDefinition,
  DefinitionJson,
  DetectionPayload,
  ExplanationPayload,
  FrequencyRow,
  MarkingPayload,
  PaletteJson,
  RunSummary,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}: ${JSON.stringify(detail)}`);
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail: unknown = null;
    try {
      detail = (await response.json()).detail;
    } catch {
      detail = await response.text().catch(() => null);
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class GatewayClient {
  constructor(
    private base: string,
    private project: string,
  ) {}

  private url(path: string): string {
    return `${this.base}/api/projects/${this.project}${path}`;
  }

  async health(): Promise<{ status: string }> {
    return parseOrThrow(await fetch(`${this.base}/api/health`));
  }

  async palette(): Promise<PaletteJson> {
    return parseOrThrow(await fetch(this.url("/palette")));
  }

  async definitions(): Promise<DefinitionJson[]> {
    return parseOrThrow(await fetch(this.url("/definitions")));
  }

  async postDefinition(definition: DefinitionJson): Promise<CompiledDefinition> {
    return parseOrThrow(
      await fetch(this.url("/definitions"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(definition),
      }),
    );
  }

  async frequencies(
    feedId: string,
    windowSeconds: number,
    context = "any",
  ): Promise<FrequencyRow[]> {
    const query = `window=${windowSeconds}&context=${encodeURIComponent(context)}`;
    return parseOrThrow(
      await fetch(this.url(`/feeds/${encodeURIComponent(feedId)}/frequencies?${query}`)),
    );
  }

  async markRegular(marking: MarkingPayload): Promise<{ version: number }> {
    return parseOrThrow(
      await fetch(this.url(`/feeds/${encodeURIComponent(marking.feedId)}/regular`), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({
          classLabel: marking.classLabel,
          context: marking.context,
          markedBy: marking.markedBy ?? "ui",
        }),
      }),
    );
  }

  async unmarkRegular(
    feedId: string,
    classLabel: string,
    context: string,
  ): Promise<{ version: number }> {
    const query = `classLabel=${encodeURIComponent(classLabel)}&context=${encodeURIComponent(context)}`;
    return parseOrThrow(
      await fetch(this.url(`/feeds/${encodeURIComponent(feedId)}/regular?${query}`), {
        method: "DELETE",
      }),
    );
  }

  async detections(since = 0): Promise<{ detections: DetectionPayload[]; next: number }> {
    return parseOrThrow(await fetch(this.url(`/detections?since=${since}`)));
  }

  async explanation(detectionId: string): Promise<ExplanationPayload> {
    return parseOrThrow(
      await fetch(this.url(`/detections/${detectionId}/explanation`)),
    );
  }

  async runScenario(body: {
    scenario?: unknown;
    scenarioPath?: string;
    seed?: number;
  }): Promise<RunSummary> {
    return parseOrThrow(
      await fetch(this.url("/scenario/run"), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  streamUrl(): string {
    return this.url("/stream");
  }
}
