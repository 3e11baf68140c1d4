// Annotation screen controller: loads the current use pair, validates the
// chosen label and submits it, then advances. The server stays the arbiter of
// ordering; a rejected submit leaves the screen on the same pair.

import { ApiClient, ApiError } from "./api.js";
import { VALID_LABELS } from "./scale.js";
import type { NextInstance } from "./types.js";

export type ScreenState = "idle" | "loading" | "annotating" | "done" | "locked" | "error";

export class AnnotationScreen {
  state: ScreenState = "idle";
  current: NextInstance | null = null;
  lastError = "";
  pendingRetry: { label: number; comment: string } | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly projectId: string,
    private readonly word: string,
  ) {}

  async load(): Promise<void> {
    this.state = "loading";
    try {
      this.current = await this.api.nextInstance(this.projectId, this.word);
    } catch (error) {
      this.handleFailure(error);
      return;
    }
    this.state = this.current.done ? "done" : "annotating";
  }

  get remaining(): number {
    return this.current?.remaining ?? 0;
  }

  async submit(label: number, comment = ""): Promise<void> {
    if (this.state !== "annotating" || !this.current?.instance_id) {
      throw new Error("no instance on screen");
    }
    if (!VALID_LABELS.has(label)) {
      throw new Error(`not a scale label: ${label}`);
    }
    try {
      await this.api.submitJudgment(
        this.projectId,
        this.word,
        this.current.instance_id,
        label,
        comment,
      );
    } catch (error) {
      // Keep the judgment around so the UI can offer a retry instead of
      // silently dropping it.
      this.pendingRetry = { label, comment };
      this.handleFailure(error);
      return;
    }
    this.pendingRetry = null;
    await this.load();
  }

  async retry(): Promise<void> {
    if (!this.pendingRetry) throw new Error("nothing to retry");
    const { label, comment } = this.pendingRetry;
    this.state = "annotating";
    await this.submit(label, comment);
  }

  private handleFailure(error: unknown): void {
    if (error instanceof ApiError && error.status === 403) {
      this.state = "locked";
      this.lastError = error.message;
      return;
    }
    this.state = "error";
    this.lastError = error instanceof Error ? error.message : String(error);
  }
}
