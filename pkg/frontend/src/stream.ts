/** Server-sent-events client over fetch streaming.
 *
 * Works in browsers and in node 20 (both expose web streams on fetch
 * responses). Sequence numbers are project-global and monotone; a gap
 * means messages were missed (drop or reconnect), and the store reacts
 * with a full refetch rather than trusting patched state.
 */

import type { StreamMessage } from "./types";

export interface StreamHandlers {
  onMessage: (message: StreamMessage) => void;
  onGap?: (expected: number, received: number) => void;
  onStatus?: (status: "connecting" | "live" | "disconnected") => void;
}

export function parseSseChunk(buffer: string): { events: string[]; rest: string } {
  const events: string[] = [];
  let rest = buffer;
  for (;;) {
    const boundary = rest.indexOf("\n\n");
    if (boundary < 0) break;
    events.push(rest.slice(0, boundary));
    rest = rest.slice(boundary + 2);
  }
  return { events, rest };
}

export function dataLinesOf(eventText: string): string | null {
  const lines = eventText
    .split("\n")
    .filter((line) => line.startsWith("data: "))
    .map((line) => line.slice("data: ".length));
  return lines.length ? lines.join("\n") : null;
}

export class StreamClient {
  private lastSequence = 0;
  private controller: AbortController | null = null;
  private stopped = false;

  constructor(
    private url: string,
    private handlers: StreamHandlers,
    private reconnectDelayMs = 1000,
  ) {}

  get sequence(): number {
    return this.lastSequence;
  }

  start(): void {
    this.stopped = false;
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      this.handlers.onStatus?.("connecting");
      this.controller = new AbortController();
      try {
        const response = await fetch(this.url, {
          signal: this.controller.signal,
          headers: { accept: "text/event-stream" },
        });
        if (!response.ok || !response.body) {
          throw new Error(`stream returned ${response.status}`);
        }
        this.handlers.onStatus?.("live");
        await this.consume(response.body);
      } catch {
        // fall through to reconnect
      }
      if (this.stopped) break;
      this.handlers.onStatus?.("disconnected");
      await new Promise((resolve) => setTimeout(resolve, this.reconnectDelayMs));
    }
  }

  private async consume(body: ReadableStream<Uint8Array>): Promise<void> {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      buffer += decoder.decode(value, { stream: true });
      const { events, rest } = parseSseChunk(buffer);
      buffer = rest;
      for (const eventText of events) {
        const data = dataLinesOf(eventText);
        if (data === null) continue; // heartbeat comment
        this.dispatch(JSON.parse(data) as StreamMessage);
      }
    }
  }

  private dispatch(message: StreamMessage): void {
    if (this.lastSequence > 0 && message.sequence > this.lastSequence + 1) {
      this.handlers.onGap?.(this.lastSequence + 1, message.sequence);
    }
    this.lastSequence = Math.max(this.lastSequence, message.sequence);
    this.handlers.onMessage(message);
  }
}
