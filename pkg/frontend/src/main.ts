/** Browser bootstrap: wires the store, stream, and renderers to the DOM.
 *
 * Expects the page to define #banner, #feeds, #detections, #explanation,
 * and #builder containers (see index.html). The gateway origin defaults
 * to the page origin; override with ?gateway=http://host:port and pick a
 * project with ?project=name.
 */

import { GatewayClient } from "./api";
import {
  addConstituent,
  emptyBuilder,
  removeConstituent,
  submitBlockers,
  toDefinition,
  type BuilderState,
} from "./builder";
import {
  renderBuilder,
  renderDetections,
  renderExplanation,
  renderExplanationError,
  renderFrequencyPanel,
  renderStreamBanner,
} from "./render";
import { Store } from "./store";
import { StreamClient } from "./stream";
import type { StreamMessage } from "./types";

const params = new URLSearchParams(window.location.search);
const gateway = params.get("gateway") ?? window.location.origin;
const project = params.get("project") ?? "demo";
const frequencyWindow = Number(params.get("window") ?? 600);

const api = new GatewayClient(gateway, project);
const store = new Store(api);
let builder: BuilderState = emptyBuilder();
let fragmentPreview: string | null = null;

function element(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} container`);
  return node;
}

function renderAll(): void {
  element("banner").innerHTML = renderStreamBanner(store.state);
  element("feeds").innerHTML = [...store.state.feeds.values()]
    .map(renderFrequencyPanel)
    .join("");
  element("detections").innerHTML = renderDetections(store.state.detections);
  const explanationHost = element("explanation");
  if (store.state.explanation) {
    explanationHost.innerHTML = renderExplanation(store.state.explanation);
  } else if (store.state.selectedDetection && store.state.lastError) {
    explanationHost.innerHTML = renderExplanationError(store.state.lastError);
  }
  element("builder").innerHTML = renderBuilder(builder, fragmentPreview);
}

store.subscribe(renderAll);

const stream = new StreamClient(api.streamUrl(), {
  onMessage: (message: StreamMessage) => store.applyMessage(message),
  onGap: () => {
    store.flagGap();
    void store
      .refetch([...store.state.feeds.keys()], frequencyWindow)
      .then(() => renderAll());
  },
  onStatus: (status) => store.setStreamStatus(status),
});

// -- DOM event delegation ---------------------------------------------------

element("feeds").addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (!target.classList.contains("mark-toggle")) return;
  const row = target.closest(".class-node") as HTMLElement | null;
  if (!row) return;
  const feed = row.dataset.feed ?? "";
  const classLabel = row.dataset.class ?? "";
  if (row.classList.contains("dimmed")) {
    void store.unmarkRegular(feed, classLabel);
  } else {
    void store.markRegular(feed, classLabel);
  }
});

element("detections").addEventListener("click", (event) => {
  const row = (event.target as HTMLElement).closest(".detection-row") as HTMLElement | null;
  if (row?.dataset.detection) {
    void store.selectDetection(row.dataset.detection);
  }
});

element("explanation").addEventListener("click", (event) => {
  const row = (event.target as HTMLElement).closest("[data-event]") as HTMLElement | null;
  if (!row?.dataset.event) return;
  document
    .querySelectorAll(".class-node.highlight, .constituent.highlight")
    .forEach((node) => node.classList.remove("highlight"));
  row.classList.add("highlight");
});

element("builder").addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (target.classList.contains("remove-constituent")) {
    event.preventDefault();
    const item = target.closest("[data-index]") as HTMLElement | null;
    if (item) {
      builder = removeConstituent(builder, Number(item.dataset.index));
      renderAll();
    }
  }
});

element("builder").addEventListener("submit", (event) => {
  event.preventDefault();
  if (submitBlockers(builder).length) return;
  void api.postDefinition(toDefinition(builder)).then((compiled) => {
    fragmentPreview = compiled.fragment;
    renderAll();
  });
});

// small form helpers used by index.html controls
(window as unknown as Record<string, unknown>).fusedeskUi = {
  store,
  api,
  addConstituent: (matcher: string, role: "initiator" | "terminator" | "supporting") => {
    builder = addConstituent(builder, matcher, role);
    renderAll();
  },
  setBuilderName: (name: string) => {
    builder = { ...builder, name };
    renderAll();
  },
  setWindow: (seconds: number) => {
    builder = { ...builder, windowSeconds: seconds };
    renderAll();
  },
  setRadius: (meters: number) => {
    builder = { ...builder, radiusMeters: meters };
    renderAll();
  },
};

void store
  .refetch([], frequencyWindow)
  .then(() => renderAll())
  .finally(() => stream.start());
