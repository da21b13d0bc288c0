// One-pair-at-a-time annotation screen: premise above hypothesis, four
// labeled buttons on keys 1-4, collapsible guidelines, live progress.
// All task text goes through textContent, never innerHTML.

import { ApiClient, Progress, TaskView } from "./api.js";

/** Button order; index i answers key (i+1). */
export const LABELS = ["contrastive", "reasoning", "entailment", "neutral"] as const;

const LABEL_TITLES: Record<(typeof LABELS)[number], string> = {
  contrastive: "Contrastive",
  reasoning: "Reasoning",
  entailment: "Entailment",
  neutral: "Neutral",
};

export interface AppOptions {
  /** When true, a key press only stages the choice; Enter submits it. */
  confirmMode?: boolean;
}

export class AnnotationApp {
  private current: TaskView | null = null;
  private submitted = new Set<string>();
  private inflight = false;
  private staged: string | null = null;
  private readonly confirmMode: boolean;
  private keyHandler = (event: KeyboardEvent) => this.onKey(event);

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly annotator: string,
    options: AppOptions = {},
  ) {
    this.confirmMode = options.confirmMode ?? false;
  }

  async start(): Promise<void> {
    this.buildSkeleton();
    try {
      const text = await this.api.guidelines();
      this.element("guidelines-text").textContent = text;
    } catch {
      this.element("guidelines-text").textContent = "(guidelines unavailable)";
    }
    document.addEventListener("keydown", this.keyHandler);
    await this.refreshProgress();
    await this.advance();
  }

  stop(): void {
    document.removeEventListener("keydown", this.keyHandler);
  }

  private buildSkeleton(): void {
    this.root.textContent = "";
    const make = (tag: string, id: string, parent: HTMLElement): HTMLElement => {
      const node = document.createElement(tag);
      node.id = id;
      parent.appendChild(node);
      return node;
    };
    const banner = make("div", "banner", this.root);
    banner.hidden = true;
    const guidelines = document.createElement("details");
    guidelines.id = "guidelines";
    const summary = document.createElement("summary");
    summary.textContent = "Guidelines";
    guidelines.appendChild(summary);
    make("pre", "guidelines-text", guidelines as unknown as HTMLElement);
    this.root.appendChild(guidelines);
    const card = make("div", "pair-card", this.root);
    make("p", "premise", card);
    make("p", "hypothesis", card);
    const buttons = make("div", "buttons", this.root);
    LABELS.forEach((label, index) => {
      const button = document.createElement("button");
      button.className = "label-button";
      button.dataset.label = label;
      button.textContent = `${index + 1} · ${LABEL_TITLES[label]}`;
      button.addEventListener("click", () => void this.choose(label));
      buttons.appendChild(button);
    });
    const toast = make("div", "toast", this.root);
    toast.hidden = true;
    make("div", "progress", this.root);
  }

  private element(id: string): HTMLElement {
    const node = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  }

  private onKey(event: KeyboardEvent): void {
    if (!this.current) return;
    const index = Number.parseInt(event.key, 10) - 1;
    if (index >= 0 && index < LABELS.length) {
      const label = LABELS[index]!;
      if (this.confirmMode) {
        this.staged = label;
        this.showToast(`selected ${LABEL_TITLES[label]} – Enter to confirm`);
      } else {
        void this.choose(label);
      }
      event.preventDefault();
    } else if (event.key === "Enter" && this.confirmMode && this.staged) {
      const staged = this.staged;
      this.staged = null;
      void this.choose(staged);
      event.preventDefault();
    }
  }

  /** Submit exactly once per task, then move on. */
  private async choose(label: string): Promise<void> {
    const task = this.current;
    if (!task || this.inflight || this.submitted.has(task.task_id)) return;
    this.inflight = true;
    this.submitted.add(task.task_id);
    try {
      const outcome = await this.api.submitLabel(
        task.task_id,
        this.annotator,
        label,
      );
      if (outcome === "conflict") {
        this.showToast("vote already recorded for this task");
      }
    } catch (error) {
      this.showToast(`submission failed: ${String(error)}`);
    } finally {
      this.inflight = false;
    }
    await this.refreshProgress();
    await this.advance();
  }

  private async advance(): Promise<void> {
    let task: TaskView | null = null;
    try {
      task = await this.api.nextTask(this.annotator);
    } catch (error) {
      this.current = null;
      this.showBanner(`cannot reach the campaign service: ${String(error)}`);
      return;
    }
    this.current = task;
    if (!task) {
      this.showBanner("campaign complete – nothing left to annotate");
      this.element("pair-card").hidden = true;
      this.element("buttons").hidden = true;
      return;
    }
    this.element("banner").hidden = true;
    this.element("pair-card").hidden = false;
    this.element("buttons").hidden = false;
    this.element("premise").textContent = task.premise;
    this.element("hypothesis").textContent = task.hypothesis;
  }

  private async refreshProgress(): Promise<void> {
    const node = this.element("progress");
    try {
      const progress: Progress = await this.api.progress();
      const done = progress.complete + progress.discarded;
      const total = progress.open + done;
      node.textContent = `${done} / ${total} complete`;
      node.classList.remove("stale");
    } catch {
      node.classList.add("stale");
      node.title = "progress may be out of date";
    }
  }

  private showToast(message: string): void {
    const toast = this.element("toast");
    toast.textContent = message;
    toast.hidden = false;
  }

  private showBanner(message: string): void {
    const banner = this.element("banner");
    banner.textContent = message;
    banner.hidden = false;
  }
}
