// Turn-locked interaction state shared by the DOM layer and scripted tests.
// The console only ever offers the moves the protocol admits at the current
// turn, and invalid input is stopped locally: nothing is posted.

import { SessionClient, PostResult } from "./client.js";
import {
  correctionHint, correctionTextValid, selectionHint, selectionValid,
} from "./grammarlite.js";
import type { Snapshot } from "./types.js";

export interface Moves {
  canInstruct: boolean;
  canSelect: boolean;
  canAnswer: boolean;
  canCorrect: boolean;
  canProceed: boolean;
}

export class TeacherConsole {
  snapshot: Snapshot | null = null;
  previousBelief: Snapshot["belief"] | null = null;
  selection = new Set<string>();
  correctionTarget: string | null = null;
  validationError: string | null = null;
  lastPost: PostResult | null = null;

  constructor(private client: SessionClient) {}

  async refresh(): Promise<Snapshot> {
    const next = await this.client.state();
    if (this.snapshot && this.snapshot.turn !== next.turn) {
      this.previousBelief = this.snapshot.belief;
    }
    this.snapshot = next;
    if (next.turn !== "awaiting_answer") this.selection.clear();
    if (next.turn !== "awaiting_feedback") this.correctionTarget = null;
    return next;
  }

  moves(): Moves {
    const turn = this.snapshot?.turn ?? "awaiting_instruction";
    return {
      canInstruct: turn === "awaiting_instruction",
      canSelect: turn === "awaiting_answer" || turn === "awaiting_feedback",
      canAnswer: turn === "awaiting_answer",
      canCorrect: turn === "awaiting_feedback",
      canProceed: turn === "awaiting_feedback",
    };
  }

  toggleObject(id: string): void {
    if (!this.snapshot) return;
    if (this.snapshot.turn === "awaiting_answer") {
      if (this.selection.has(id)) this.selection.delete(id);
      else this.selection.add(id);
    } else if (this.snapshot.turn === "awaiting_feedback") {
      this.correctionTarget = this.correctionTarget === id ? null : id;
    }
  }

  async submitInstruction(text: string): Promise<boolean> {
    if (!this.moves().canInstruct) {
      this.validationError = "not your turn to instruct";
      return false;
    }
    this.lastPost = await this.client.instruction(text);
    this.validationError = this.lastPost.ok ? null : this.lastPost.error ?? "rejected";
    return this.lastPost.ok;
  }

  /** designation selection; refuses locally on a cardinality mismatch */
  async submitAnswer(): Promise<boolean> {
    const snap = this.snapshot;
    if (!snap || !this.moves().canAnswer) {
      this.validationError = "no question is awaiting an answer";
      return false;
    }
    const utterance = snap.utterance ?? "";
    if (!selectionValid(utterance, this.selection.size)) {
      this.validationError = selectionHint(utterance, this.selection.size);
      return false; // nothing posted
    }
    this.lastPost = await this.client.answer([...this.selection].sort());
    this.validationError = this.lastPost.ok ? null : this.lastPost.error ?? "rejected";
    if (this.lastPost.ok) this.selection.clear();
    return this.lastPost.ok;
  }

  async submitNoReferent(): Promise<boolean> {
    if (!this.moves().canAnswer) {
      this.validationError = "no question is awaiting an answer";
      return false;
    }
    this.lastPost = await this.client.answer([], true);
    this.validationError = this.lastPost.ok ? null : this.lastPost.error ?? "rejected";
    return this.lastPost.ok;
  }

  async submitCorrection(text: string): Promise<boolean> {
    if (!this.moves().canCorrect) {
      this.validationError = "the agent has not acted";
      return false;
    }
    if (this.correctionTarget === null) {
      this.validationError = "click the object the correction is about";
      return false;
    }
    if (!correctionTextValid(text)) {
      this.validationError = correctionHint();
      return false; // nothing posted
    }
    this.lastPost = await this.client.correction(text, this.correctionTarget);
    this.validationError = this.lastPost.ok ? null : this.lastPost.error ?? "rejected";
    if (this.lastPost.ok) this.correctionTarget = null;
    return this.lastPost.ok;
  }

  async proceed(): Promise<boolean> {
    if (!this.moves().canProceed) {
      this.validationError = "nothing to approve right now";
      return false;
    }
    this.lastPost = await this.client.proceed();
    this.validationError = this.lastPost.ok ? null : this.lastPost.error ?? "rejected";
    return this.lastPost.ok;
  }

  async waitForTurn(turns: Snapshot["turn"][], timeoutMs = 60_000,
                    intervalMs = 25): Promise<Snapshot> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const snap = await this.refresh();
      if (turns.includes(snap.turn)) return snap;
      if (snap.turn === "error") throw new Error(`session error: ${snap.error}`);
      if (Date.now() > deadline) {
        throw new Error(`timed out waiting for ${turns.join("/")}; at ${snap.turn}`);
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}
