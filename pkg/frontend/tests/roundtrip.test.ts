// Live round-trip against a real server (acceptance: the scripted session
// completes the introduction and mask scenes, every sent choice message is
// bit-exact against the wire schema, and the server transcript equals a
// REPL run with the same seed and choices).

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { choiceMessage, parseServerMessage, startMessage } from "../src/protocol.js";
import { canChoose, initialView, reduce, ViewState } from "../src/reducer.js";

const REPO_ROOT = resolve(__dirname, "..", "..");
const PACK = join(REPO_ROOT, "src", "persuader", "packs", "covid19_en.json");
const PORT = 8731;
const SEED = 20260810;

const GREETING =
  "Hello, my name is InfoRob, I am here to give you suggestions concerning " +
  "health and prevention issues on the topic of COVID-19";
const MASK_SUBSTITUTION =
  "Consider the fact that in case of a mask allergy you can decrease the " +
  "possibility of contagion by following the other two virtuous rules, which " +
  "are keeping your distance and washing often your hands.";

let server: ChildProcess;
let transcriptsDir: string;

async function serverReady(): Promise<void> {
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`http://127.0.0.1:${PORT}/`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error("server did not come up");
}

beforeAll(async () => {
  transcriptsDir = mkdtempSync(join(tmpdir(), "persuader-ws-"));
  server = spawn(
    "python3",
    [
      "-m", "persuader.cli",
      "serve",
      "--pack", PACK,
      "--port", String(PORT),
      "--transcripts", transcriptsDir,
    ],
    { cwd: REPO_ROOT, stdio: "ignore" },
  );
  await serverReady();
}, 30000);

afterAll(() => {
  server?.kill();
});

interface DriveResult {
  view: ViewState;
  sentFrames: string[];
  choices: string[];
}

/** Scripted user: always the skeptic (-low) option, through the reducer. */
function driveSession(): Promise<DriveResult> {
  return new Promise((resolvePromise, rejectPromise) => {
    const ws = new WebSocket(`ws://127.0.0.1:${PORT}/session`);
    let view = initialView();
    const sentFrames: string[] = [];
    const choices: string[] = [];
    const timer = setTimeout(() => rejectPromise(new Error("session timed out")), 20000);

    ws.on("open", () => {
      view = reduce(view, { kind: "connected" });
      ws.send(JSON.stringify(startMessage("covid19-en", "open_minded", SEED)));
    });
    ws.on("message", (data) => {
      const message = parseServerMessage(String(data));
      if (!message) {
        rejectPromise(new Error(`unparseable server frame: ${data}`));
        return;
      }
      view = reduce(view, { kind: "server", message });
      if (message.type === "error") {
        rejectPromise(new Error(`server error: ${message.code}`));
        return;
      }
      if (message.type === "end") {
        clearTimeout(timer);
        ws.close();
        resolvePromise({ view, sentFrames, choices });
        return;
      }
      if (view.pendingOptions.length > 0) {
        const low = view.pendingOptions.find((o) => o.id.endsWith("-low"));
        const optionId = (low ?? view.pendingOptions[0]!).id;
        if (canChoose(view, optionId) && view.sessionId) {
          const frame = JSON.stringify(choiceMessage(view.sessionId, optionId));
          view = reduce(view, { kind: "chose", optionId });
          sentFrames.push(frame);
          choices.push(optionId);
          ws.send(frame);
        }
      }
    });
    ws.on("error", (err) => rejectPromise(err));
  });
}

describe("round trip against a live server", () => {
  it("completes the dialogue and matches a REPL run byte for byte", async () => {
    const { view, sentFrames, choices } = await driveSession();

    // the opening bubble is the greeting; the mask scene ran to its climax
    expect(view.bubbles[0]).toMatchObject({ role: "agent", text: GREETING });
    const texts = view.bubbles.filter((b) => b.role === "agent").map((b) => b.text);
    expect(texts).toContain(MASK_SUBSTITUTION);
    expect(view.summary).not.toBeNull();
    expect(view.summary!["mask"]).toEqual({ knowledge: "low", intention: "low" });
    expect(view.banner).toBeNull(); // seqs arrived contiguous

    // every sent frame is bit-exact against the wire schema
    for (const frame of sentFrames) {
      const parsed = JSON.parse(frame);
      expect(Object.keys(parsed).sort()).toEqual(["option", "session", "type"]);
      expect(parsed.type).toBe("choice");
      expect(typeof parsed.session).toBe("string");
      expect(typeof parsed.option).toBe("string");
      expect(frame).toBe(
        JSON.stringify({ type: "choice", session: parsed.session, option: parsed.option }),
      );
    }

    // the server transcript equals a REPL run with the same seed and choices
    const files = readdirSync(transcriptsDir).filter((f) => f.endsWith(".jsonl"));
    expect(files.length).toBe(1);
    const serverTranscript = readFileSync(join(transcriptsDir, files[0]!), "utf-8");

    const replDir = mkdtempSync(join(tmpdir(), "persuader-repl-"));
    const repl = spawnSync(
      "python3",
      [
        "-m", "persuader.cli",
        "repl",
        "--pack", PACK,
        "--seed", String(SEED),
        "--profile", "open_minded",
        "--transcripts", replDir,
      ],
      { cwd: REPO_ROOT, input: choices.join("\n") + "\n", encoding: "utf-8" },
    );
    expect(repl.status).toBe(0);
    const replTranscript = readFileSync(join(replDir, `repl-${SEED}.jsonl`), "utf-8");
    expect(serverTranscript).toBe(replTranscript);
  }, 40000);
});
