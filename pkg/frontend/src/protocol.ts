// Wire protocol of the /session WebSocket. One JSON message per frame;
// the client sends exactly the fields below and nothing else.

export interface OptionPayload {
  id: string;
  label: string;
}

export interface UtteranceMessage {
  type: "utterance";
  session: string;
  seq: number;
  function: string;
  scene: string;
  technique: string | null;
  text: string;
  options: OptionPayload[];
}

export interface TopicSummary {
  knowledge: string;
  intention: string;
}

export interface EndMessage {
  type: "end";
  session: string;
  summary: { per_topic: Record<string, TopicSummary> };
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export type ServerMessage = UtteranceMessage | EndMessage | ErrorMessage;

export type Profile = "open_minded" | "neutral" | "random";

export interface StartMessage {
  type: "start";
  pack: string;
  profile: Profile;
  seed?: number;
}

export interface ChoiceMessage {
  type: "choice";
  session: string;
  option: string;
}

export function startMessage(pack: string, profile: Profile, seed?: number): StartMessage {
  const message: StartMessage = { type: "start", pack, profile };
  if (seed !== undefined) {
    message.seed = seed;
  }
  return message;
}

export function choiceMessage(session: string, option: string): ChoiceMessage {
  return { type: "choice", session, option };
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) {
    return null;
  }
  const message = data as Record<string, unknown>;
  if (message.type === "utterance" || message.type === "end" || message.type === "error") {
    return message as unknown as ServerMessage;
  }
  return null;
}
