// Pure view state: the rendered transcript is a function of the received
// message sequence plus the user's own clicks. No dialogue logic lives
// here; the server decides everything.

import type { OptionPayload, ServerMessage, TopicSummary } from "./protocol.js";

export interface Bubble {
  role: "agent" | "user" | "system";
  text: string;
  seq: number | null; // server seq for agent bubbles, null otherwise
  function?: string;
  technique?: string | null;
  scene?: string;
}

export interface ViewState {
  sessionId: string | null;
  connection: "idle" | "connecting" | "open" | "closed";
  bubbles: Bubble[];
  pendingOptions: OptionPayload[]; // non-empty iff a question awaits an answer
  awaitingServer: boolean; // a choice is in flight; buttons stay disabled
  lastSeq: number;
  summary: Record<string, TopicSummary> | null;
  banner: string | null; // protocol-error banner (e.g. a seq gap)
}

export type ViewEvent =
  | { kind: "connecting" }
  | { kind: "connected" }
  | { kind: "disconnected" }
  | { kind: "server"; message: ServerMessage }
  | { kind: "chose"; optionId: string };

export function initialView(): ViewState {
  return {
    sessionId: null,
    connection: "idle",
    bubbles: [],
    pendingOptions: [],
    awaitingServer: false,
    lastSeq: -1,
    summary: null,
    banner: null,
  };
}

export function reduce(view: ViewState, event: ViewEvent): ViewState {
  switch (event.kind) {
    case "connecting":
      return { ...initialView(), connection: "connecting" };
    case "connected":
      return { ...view, connection: "open" };
    case "disconnected":
      return { ...view, connection: "closed", pendingOptions: [], awaitingServer: false };
    case "chose": {
      const chosen = view.pendingOptions.find((o) => o.id === event.optionId);
      if (!chosen || view.awaitingServer) {
        return view; // stale or repeated click: strictly a no-op
      }
      return {
        ...view,
        bubbles: [...view.bubbles, { role: "user", text: chosen.label, seq: null }],
        pendingOptions: [],
        awaitingServer: true,
      };
    }
    case "server":
      return applyServer(view, event.message);
  }
}

function applyServer(view: ViewState, message: ServerMessage): ViewState {
  if (message.type === "error") {
    return {
      ...view,
      awaitingServer: false,
      bubbles: [
        ...view.bubbles,
        { role: "system", text: `${message.code}: ${message.message}`, seq: null },
      ],
    };
  }
  if (message.type === "end") {
    return {
      ...view,
      awaitingServer: false,
      pendingOptions: [],
      summary: message.summary.per_topic,
    };
  }
  const banner =
    message.seq === view.lastSeq + 1
      ? view.banner
      : `protocol error: expected message ${view.lastSeq + 1}, got ${message.seq}`;
  return {
    ...view,
    sessionId: message.session,
    awaitingServer: false,
    lastSeq: message.seq,
    banner,
    bubbles: [
      ...view.bubbles,
      {
        role: "agent",
        text: message.text,
        seq: message.seq,
        function: message.function,
        technique: message.technique,
        scene: message.scene,
      },
    ],
    pendingOptions: message.options,
  };
}

// True when a click on this option should actually send a choice message.
export function canChoose(view: ViewState, optionId: string): boolean {
  return !view.awaitingServer && view.pendingOptions.some((o) => o.id === optionId);
}
