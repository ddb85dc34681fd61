/** Entry point: bind the console to the live service. */

import { ApiClient } from "./api";
import { SessionStore } from "./state";
import { ConsoleElements, wire } from "./render";

export function boot(doc: Document, baseUrl = ""): SessionStore {
  const byId = (id: string) => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  };
  const el: ConsoleElements = {
    form: byId("command-form") as HTMLFormElement,
    input: byId("command-input") as HTMLInputElement,
    layerBar: byId("layer-bar"),
    canvas: byId("heatmap") as HTMLCanvasElement,
    rankedList: byId("ranked-list"),
    status: byId("status"),
    robotLabel: byId("robot-label"),
  };
  const store = new SessionStore(new ApiClient(baseUrl));
  wire(store, el);
  void store.init();
  return store;
}

declare global {
  interface Window {
    groundnavStore?: SessionStore;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", () => {
    window.groundnavStore = boot(document);
  });
}
