// Tutorial flow: guidelines -> instances -> graded result. Projects stay
// locked until the server reports a pass.

import { ApiClient } from "./api.js";
import { VALID_LABELS } from "./scale.js";
import type { TutorialInstance, TutorialResult } from "./types.js";

export type TutorialPhase = "guidelines" | "annotating" | "passed" | "failed";

export class TutorialFlow {
  phase: TutorialPhase = "guidelines";
  instances: TutorialInstance[] = [];
  labels: number[] = [];
  result: TutorialResult | null = null;

  constructor(private readonly api: ApiClient) {}

  async start(): Promise<void> {
    this.instances = await this.api.tutorialInstances();
    this.labels = [];
    this.result = null;
    this.phase = "annotating";
  }

  get currentIndex(): number {
    return this.labels.length;
  }

  get finished(): boolean {
    return this.labels.length === this.instances.length && this.instances.length > 0;
  }

  answer(label: number): void {
    if (this.phase !== "annotating" || this.finished) {
      throw new Error("tutorial is not accepting answers");
    }
    if (!VALID_LABELS.has(label)) {
      throw new Error(`not a scale label: ${label}`);
    }
    this.labels.push(label);
  }

  async submit(): Promise<TutorialResult> {
    if (!this.finished) throw new Error("tutorial not fully answered");
    this.result = await this.api.submitTutorial(this.labels);
    this.phase = this.result.passed ? "passed" : "failed";
    return this.result;
  }

  get unlocked(): boolean {
    return this.phase === "passed";
  }
}
