// Wire types for the session protocol (version 1).

export type Turn =
  | "awaiting_instruction"
  | "agent_thinking"
  | "awaiting_answer"
  | "awaiting_feedback"
  | "done"
  | "error";

export interface SceneObjectView {
  id: string;
  x: number;
  y: number;
  color: string;
  shape: string;
  texture: string;
  held: boolean;
}

export interface BeliefView {
  objects: string[];
  vocabulary: string[];
  theory: string[];
  prior_weights: Record<string, number>;
  grounded_weights: Record<string, number>;
  entropy: number;
  support_size: number;
}

export interface Snapshot {
  version: number;
  turn: Turn;
  utterance: string | null;
  error: string | null;
  scene: { objects: SceneObjectView[]; grid: number };
  belief: BeliefView;
  transcript: Record<string, unknown>[];
  rewards: number[];
  last_undo: { object: string } | null;
}
