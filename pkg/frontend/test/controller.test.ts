import { beforeEach, describe, expect, it, vi } from "vitest";
import { TeacherConsole } from "../src/controller.js";
import type { Snapshot } from "../src/types.js";

function snap(turn: Snapshot["turn"], utterance: string | null = null): Snapshot {
  return {
    version: 1, turn, utterance, error: null,
    scene: {
      grid: 8,
      objects: [
        { id: "o1", x: 0, y: 0, color: "red", shape: "cube", texture: "plain", held: false },
        { id: "o2", x: 1, y: 1, color: "blue", shape: "cube", texture: "plain", held: false },
      ],
    },
    belief: { objects: ["o1", "o2"], vocabulary: [], theory: [],
              prior_weights: {}, grounded_weights: {}, entropy: 0, support_size: 0 },
    transcript: [], rewards: [], last_undo: null,
  };
}

function fakeClient(current: () => Snapshot) {
  return {
    state: vi.fn(async () => current()),
    instruction: vi.fn(async () => ({ ok: true, status: 200 })),
    answer: vi.fn(async () => ({ ok: true, status: 200 })),
    correction: vi.fn(async () => ({ ok: true, status: 200 })),
    proceed: vi.fn(async () => ({ ok: true, status: 200 })),
  };
}

describe("TeacherConsole", () => {
  let turn: Snapshot["turn"];
  let utterance: string | null;
  let client: ReturnType<typeof fakeClient>;
  let ui: TeacherConsole;

  beforeEach(() => {
    turn = "awaiting_instruction";
    utterance = null;
    client = fakeClient(() => snap(turn, utterance));
    ui = new TeacherConsole(client as never);
  });

  it("locks moves to the current turn", async () => {
    await ui.refresh();
    expect(ui.moves().canInstruct).toBe(true);
    expect(ui.moves().canAnswer).toBe(false);
    expect(await ui.submitAnswer()).toBe(false);
    expect(client.answer).not.toHaveBeenCalled();
  });

  it("blocks wrong-cardinality answers locally: nothing posted", async () => {
    turn = "awaiting_answer";
    utterance = "show me the two granny smiths";
    await ui.refresh();
    ui.toggleObject("o1");
    expect(await ui.submitAnswer()).toBe(false);
    expect(ui.validationError).toContain("exactly 2");
    expect(client.answer).not.toHaveBeenCalled();
    ui.toggleObject("o2");
    expect(await ui.submitAnswer()).toBe(true);
    expect(client.answer).toHaveBeenCalledWith(["o1", "o2"]);
  });

  it("accepts a single click for an existential question", async () => {
    turn = "awaiting_answer";
    utterance = "show me a cube";
    await ui.refresh();
    ui.toggleObject("o2");
    expect(await ui.submitAnswer()).toBe(true);
    expect(client.answer).toHaveBeenCalledWith(["o2"]);
  });

  it("rejects off-template corrections locally", async () => {
    turn = "awaiting_feedback";
    utterance = "(picks o1)";
    await ui.refresh();
    ui.toggleObject("o1");
    expect(await ui.submitCorrection("That cube.")).toBe(false);
    expect(client.correction).not.toHaveBeenCalled();
    expect(await ui.submitCorrection("No. This is a cylinder.")).toBe(true);
    expect(client.correction).toHaveBeenCalledWith("No. This is a cylinder.", "o1");
  });

  it("requires a designated object before correcting", async () => {
    turn = "awaiting_feedback";
    await ui.refresh();
    expect(await ui.submitCorrection("No. This is a cylinder.")).toBe(false);
    expect(ui.validationError).toContain("click the object");
  });

  it("clears selection state on turn changes", async () => {
    turn = "awaiting_answer";
    utterance = "show me a cube";
    await ui.refresh();
    ui.toggleObject("o1");
    expect(ui.selection.size).toBe(1);
    turn = "agent_thinking";
    await ui.refresh();
    expect(ui.selection.size).toBe(0);
  });
});
