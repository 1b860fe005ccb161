// DOM bootstrap: polling loop, turn-locked controls, canvas scene, belief
// heat selector, and the running transcript.

import { SessionClient } from "./client.js";
import { TeacherConsole } from "./controller.js";
import { changedWeights } from "./heat.js";
import { canvasSize, drawScene, objectAt } from "./render.js";
import type { Snapshot } from "./types.js";

const base = new URLSearchParams(location.search).get("server") ?? "http://127.0.0.1:8321";
const console_ = new TeacherConsole(new SessionClient(base));

const el = (id: string) => document.getElementById(id) as HTMLElement;
const canvas = el("scene") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const heatSelect = el("heat") as HTMLSelectElement;

let lastPainted: Snapshot | null = null;

canvas.addEventListener("click", (ev) => {
  if (!console_.snapshot || !console_.moves().canSelect) return;
  const rect = canvas.getBoundingClientRect();
  const hit = objectAt(console_.snapshot, ev.clientX - rect.left, ev.clientY - rect.top);
  if (hit) {
    console_.toggleObject(hit.id);
    paint(console_.snapshot);
  }
});

(el("send-instruction") as HTMLButtonElement).onclick = async () => {
  const text = (el("instruction") as HTMLInputElement).value;
  await console_.submitInstruction(text);
  paintValidation();
};
(el("send-answer") as HTMLButtonElement).onclick = async () => {
  await console_.submitAnswer();
  paintValidation();
};
(el("no-referent") as HTMLButtonElement).onclick = async () => {
  await console_.submitNoReferent();
  paintValidation();
};
(el("send-correction") as HTMLButtonElement).onclick = async () => {
  await console_.submitCorrection((el("correction") as HTMLInputElement).value);
  paintValidation();
};
(el("send-proceed") as HTMLButtonElement).onclick = async () => {
  await console_.proceed();
  paintValidation();
};

function paintValidation(): void {
  el("validation").textContent = console_.validationError ?? "";
}

function paintControls(snapshot: Snapshot): void {
  const moves = console_.moves();
  (el("send-instruction") as HTMLButtonElement).disabled = !moves.canInstruct;
  (el("send-answer") as HTMLButtonElement).disabled = !moves.canAnswer;
  (el("no-referent") as HTMLButtonElement).disabled = !moves.canAnswer;
  (el("send-correction") as HTMLButtonElement).disabled = !moves.canCorrect;
  (el("send-proceed") as HTMLButtonElement).disabled = !moves.canProceed;
  el("turn").textContent = snapshot.turn;
  const undoNote = snapshot.last_undo
    ? ` — undid the corrected motion of ${snapshot.last_undo.object}; scene restored`
    : "";
  el("utterance").textContent = (snapshot.utterance ?? "") + undoNote;
  el("rewards").textContent = snapshot.rewards.length
    ? `rewards: ${snapshot.rewards.map((r) => r.toFixed(2)).join(", ")} ` +
      `(sum ${snapshot.rewards.reduce((a, b) => a + b, 0).toFixed(2)})`
    : "";
}

function paintHeatChoices(snapshot: Snapshot): void {
  const current = heatSelect.value;
  const want = ["", ...snapshot.belief.vocabulary];
  const have = Array.from(heatSelect.options, (o) => o.value);
  if (want.join("|") !== have.join("|")) {
    heatSelect.innerHTML = "";
    for (const sym of want) {
      const opt = document.createElement("option");
      opt.value = sym;
      opt.textContent = sym === "" ? "(no heat)" : sym;
      heatSelect.appendChild(opt);
    }
    heatSelect.value = want.includes(current) ? current : "";
  }
}

function paintTranscript(snapshot: Snapshot): void {
  const list = el("transcript");
  list.innerHTML = "";
  for (const event of snapshot.transcript) {
    const item = document.createElement("li");
    item.textContent = JSON.stringify(event);
    list.appendChild(item);
  }
  const changed = changedWeights(lastPainted?.belief ?? null, snapshot.belief);
  el("belief-meta").textContent =
    `entropy ${snapshot.belief.entropy.toFixed(3)} nats; ` +
    `${snapshot.belief.support_size} exemplars; ` +
    (changed.length ? `changed: ${changed.slice(0, 8).join(", ")}` : "no weight changes");
}

function paint(snapshot: Snapshot): void {
  canvas.width = canvasSize(snapshot.scene.grid);
  canvas.height = canvasSize(snapshot.scene.grid);
  drawScene(ctx, snapshot, heatSelect.value || null, console_.selection,
            console_.correctionTarget);
  paintControls(snapshot);
  paintHeatChoices(snapshot);
  paintTranscript(snapshot);
  lastPainted = snapshot;
}

async function loop(): Promise<void> {
  try {
    const snapshot = await console_.refresh();
    paint(snapshot);
    if (snapshot.error) el("validation").textContent = snapshot.error;
  } catch (err) {
    el("validation").textContent = String(err);
  }
  setTimeout(loop, 300);
}

heatSelect.onchange = () => lastPainted && paint(lastPainted);
void loop();
