/** View model: the single mutable client state, fed by API responses and
 * stream messages.
 *
 * Server data is never edited locally except for the optimistic marking
 * toggle, which reverts if the POST fails. A reload (or sequence gap)
 * rebuilds everything from the API, so the UI holds no private truth.
 */

import type { GatewayClient } from "./api";
import type {
  DetectionPayload,
  ExplanationPayload,
  FrequencyUpdatePayload,
  MarkingChangedPayload,
  StreamMessage,
} from "./types";

export interface ClassRow {
  classLabel: string;
  count: number;
  marked: boolean;
}

export interface FeedPanelState {
  feedId: string;
  rows: ClassRow[];
}

export interface ViewState {
  feeds: Map<string, FeedPanelState>;
  markings: Set<string>; // "feed|class|context"
  detections: DetectionPayload[];
  detectionCursor: number;
  selectedDetection: string | null;
  explanation: ExplanationPayload | null;
  streamStatus: "connecting" | "live" | "disconnected";
  needsRefetch: boolean;
  lastError: string | null;
}

export function markingKey(feedId: string, classLabel: string, context: string): string {
  return `${feedId}|${classLabel}|${context}`;
}

function blankState(): ViewState {
  return {
    feeds: new Map(),
    markings: new Set(),
    detections: [],
    detectionCursor: 0,
    selectedDetection: null,
    explanation: null,
    streamStatus: "connecting",
    needsRefetch: false,
    lastError: null,
  };
}

export class Store {
  state: ViewState = blankState();
  private listeners: (() => void)[] = [];

  constructor(private api: GatewayClient) {}

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((entry) => entry !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  private panel(feedId: string): FeedPanelState {
    let panel = this.state.feeds.get(feedId);
    if (!panel) {
      panel = { feedId, rows: [] };
      this.state.feeds.set(feedId, panel);
    }
    return panel;
  }

  private isMarked(feedId: string, classLabel: string): boolean {
    for (const context of ["any", "day", "night"]) {
      if (this.state.markings.has(markingKey(feedId, classLabel, context))) {
        return true;
      }
    }
    return false;
  }

  private upsertRow(feedId: string, classLabel: string, count: number): void {
    const panel = this.panel(feedId);
    const row = panel.rows.find((entry) => entry.classLabel === classLabel);
    if (row) {
      row.count = count;
      row.marked = this.isMarked(feedId, classLabel);
    } else {
      panel.rows.push({
        classLabel,
        count,
        marked: this.isMarked(feedId, classLabel),
      });
    }
    panel.rows.sort(
      (a, b) => b.count - a.count || a.classLabel.localeCompare(b.classLabel),
    );
  }

  private refreshMarkedFlags(): void {
    for (const panel of this.state.feeds.values()) {
      for (const row of panel.rows) {
        row.marked = this.isMarked(panel.feedId, row.classLabel);
      }
    }
  }

  // -- stream ingestion ----------------------------------------------------

  applyMessage(message: StreamMessage): void {
    switch (message.kind) {
      case "frequency_update": {
        const payload = message.payload as FrequencyUpdatePayload;
        this.upsertRow(payload.feedId, payload.classLabel, payload.count);
        break;
      }
      case "detection": {
        const payload = message.payload as DetectionPayload;
        this.state.detections.push(payload);
        this.state.detectionCursor += 1;
        break;
      }
      case "marking_changed": {
        const payload = message.payload as MarkingChangedPayload;
        const key = markingKey(payload.feedId, payload.classLabel, payload.context);
        if (payload.marked) {
          this.state.markings.add(key);
        } else {
          this.state.markings.delete(key);
        }
        this.refreshMarkedFlags();
        break;
      }
      case "simple_event":
      case "definition_changed":
        break; // frequency_update carries the panel change
    }
    this.notify();
  }

  setStreamStatus(status: ViewState["streamStatus"]): void {
    this.state.streamStatus = status;
    this.notify();
  }

  flagGap(): void {
    this.state.needsRefetch = true;
    this.notify();
  }

  // -- full reload (startup, reconnect, sequence gap) ------------------------

  async refetch(feedIds: string[], windowSeconds: number): Promise<void> {
    const fresh = blankState();
    fresh.streamStatus = this.state.streamStatus;
    for (const feedId of feedIds) {
      try {
        const rows = await this.api.frequencies(feedId, windowSeconds);
        fresh.feeds.set(feedId, {
          feedId,
          rows: rows.map((row) => ({
            classLabel: row.class,
            count: row.count,
            marked: false,
          })),
        });
      } catch {
        // feed may not exist yet; panel stays empty
      }
    }
    const batch = await this.api.detections(0);
    fresh.detections = batch.detections;
    fresh.detectionCursor = batch.next;
    this.state = fresh;
    this.refreshMarkedFlags();
    this.notify();
  }

  // -- optimistic marking -----------------------------------------------------

  async markRegular(
    feedId: string,
    classLabel: string,
    context = "any",
  ): Promise<boolean> {
    const key = markingKey(feedId, classLabel, context);
    this.state.markings.add(key);
    this.refreshMarkedFlags();
    this.notify();
    try {
      await this.api.markRegular({ feedId, classLabel, context });
      return true;
    } catch (error) {
      this.state.markings.delete(key);
      this.refreshMarkedFlags();
      this.state.lastError = `marking failed: ${String(error)}`;
      this.notify();
      return false;
    }
  }

  async unmarkRegular(
    feedId: string,
    classLabel: string,
    context = "any",
  ): Promise<boolean> {
    const key = markingKey(feedId, classLabel, context);
    const existed = this.state.markings.delete(key);
    this.refreshMarkedFlags();
    this.notify();
    try {
      await this.api.unmarkRegular(feedId, classLabel, context);
      return true;
    } catch (error) {
      if (existed) this.state.markings.add(key);
      this.refreshMarkedFlags();
      this.state.lastError = `unmarking failed: ${String(error)}`;
      this.notify();
      return false;
    }
  }

  // -- explanation drilldown ---------------------------------------------------

  async selectDetection(detectionId: string): Promise<void> {
    this.state.selectedDetection = detectionId;
    this.state.explanation = null;
    this.notify();
    try {
      this.state.explanation = await this.api.explanation(detectionId);
    } catch (error) {
      this.state.lastError = `explanation failed: ${String(error)}`;
    }
    this.notify();
  }
}
