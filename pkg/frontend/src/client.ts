// Thin typed client over the session endpoints.  Every rejected post keeps
// the response body so callers can surface the server's explanation inline.

import type { Snapshot } from "./types.js";

export interface PostResult {
  ok: boolean;
  status: number;
  error?: string;
  expected_turn?: string;
}

export class SessionClient {
  constructor(private base: string) {}

  async state(): Promise<Snapshot> {
    const resp = await fetch(`${this.base}/state`);
    if (!resp.ok) throw new Error(`state fetch failed: ${resp.status}`);
    return (await resp.json()) as Snapshot;
  }

  private async post(path: string, payload: unknown): Promise<PostResult> {
    const resp = await fetch(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    const body = (await resp.json().catch(() => ({}))) as Record<string, unknown>;
    return {
      ok: resp.ok,
      status: resp.status,
      error: typeof body.error === "string" ? body.error : undefined,
      expected_turn:
        typeof body.expected_turn === "string" ? body.expected_turn : undefined,
    };
  }

  instruction(text: string): Promise<PostResult> {
    return this.post("/instruction", { text });
  }

  answer(objects: string[], noReferent = false): Promise<PostResult> {
    return this.post("/answer", { objects, no_referent: noReferent });
  }

  correction(text: string, object: string): Promise<PostResult> {
    return this.post("/correction", { text, object });
  }

  proceed(): Promise<PostResult> {
    return this.post("/proceed", {});
  }
}
