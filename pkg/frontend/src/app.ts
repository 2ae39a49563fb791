// DOM shell: renders the view state and forwards clicks to the socket.
// All dialogue behaviour is server-side; this file only draws and relays.

import { canChoose, initialView, reduce, ViewState } from "./reducer.js";
import { choiceMessage, parseServerMessage, Profile, startMessage } from "./protocol.js";

const PACK_ID = "covid19-en";

let view: ViewState = initialView();
let socket: WebSocket | null = null;
let debugBadges = false;

const transcriptEl = document.getElementById("transcript") as HTMLElement;
const optionsEl = document.getElementById("options") as HTMLElement;
const bannerEl = document.getElementById("banner") as HTMLElement;
const summaryEl = document.getElementById("summary") as HTMLElement;
const statusEl = document.getElementById("status") as HTMLElement;
const startButton = document.getElementById("start") as HTMLButtonElement;
const profileSelect = document.getElementById("profile") as HTMLSelectElement;
const debugToggle = document.getElementById("debug") as HTMLInputElement;

function dispatch(event: Parameters<typeof reduce>[1]): void {
  view = reduce(view, event);
  render();
}

function connect(): void {
  const profile = profileSelect.value as Profile;
  const url = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/session`;
  dispatch({ kind: "connecting" });
  socket = new WebSocket(url);
  socket.addEventListener("open", () => {
    dispatch({ kind: "connected" });
    socket!.send(JSON.stringify(startMessage(PACK_ID, profile)));
  });
  socket.addEventListener("message", (event) => {
    const message = parseServerMessage(String(event.data));
    if (message) {
      dispatch({ kind: "server", message });
    }
  });
  socket.addEventListener("close", () => dispatch({ kind: "disconnected" }));
  socket.addEventListener("error", () => dispatch({ kind: "disconnected" }));
}

function choose(optionId: string): void {
  if (!socket || !view.sessionId || !canChoose(view, optionId)) {
    return; // double clicks and stale clicks never reach the wire
  }
  const frame = JSON.stringify(choiceMessage(view.sessionId, optionId));
  dispatch({ kind: "chose", optionId });
  socket.send(frame);
}

function render(): void {
  statusEl.textContent =
    view.connection === "open"
      ? "connected"
      : view.connection === "connecting"
        ? "connecting…"
        : view.connection === "closed"
          ? "disconnected"
          : "";
  startButton.textContent = view.connection === "closed" ? "Reconnect" : "Start session";
  startButton.disabled = view.connection === "connecting" || view.connection === "open";

  bannerEl.hidden = view.banner === null;
  bannerEl.textContent = view.banner ?? "";

  transcriptEl.replaceChildren(
    ...view.bubbles.map((bubble) => {
      const div = document.createElement("div");
      div.className = `bubble ${bubble.role}`;
      const text = document.createElement("span");
      text.textContent = bubble.text;
      div.appendChild(text);
      if (debugBadges && bubble.role === "agent" && bubble.function) {
        const badge = document.createElement("span");
        badge.className = "badge";
        badge.textContent = bubble.technique
          ? `${bubble.function} · ${bubble.technique}`
          : bubble.function;
        div.appendChild(badge);
      }
      return div;
    }),
  );
  transcriptEl.scrollTop = transcriptEl.scrollHeight;

  optionsEl.replaceChildren(
    ...view.pendingOptions.map((option) => {
      const button = document.createElement("button");
      button.textContent = option.label;
      button.disabled = view.awaitingServer;
      button.addEventListener("click", () => choose(option.id));
      return button;
    }),
  );

  if (view.summary) {
    const rows = Object.entries(view.summary)
      .map(
        ([topic, levels]) =>
          `<tr><td>${topic}</td><td>${levels.knowledge}</td><td>${levels.intention}</td></tr>`,
      )
      .join("");
    summaryEl.innerHTML =
      "<h3>Session summary</h3><table><tr><th>topic</th><th>knowledge</th>" +
      `<th>intention</th></tr>${rows}</table>`;
    summaryEl.hidden = false;
  } else {
    summaryEl.hidden = true;
  }
}

startButton.addEventListener("click", connect);
debugToggle.addEventListener("change", () => {
  debugBadges = debugToggle.checked;
  render();
});
render();
