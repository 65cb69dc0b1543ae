import { ApiError, ReviewApi } from "./api.js";
import type { Hierarchy, QueueItem, Verdict } from "./types.js";

/**
 * Individual-review flow: one card per queued image with raw/transformed
 * thumbnails side by side, the predicted path with a confidence bar, the
 * top-3 alternatives, and accept / override / discard controls.
 *
 * Keyboard: a = accept, d = discard, o = open the override selector.
 * At most one submission is in flight; controls are disabled meanwhile.
 * A conflict (someone already resolved the item) refreshes the queue
 * without losing anything.
 */
export class TriageView {
  items: QueueItem[] = [];
  lastError: string | null = null;
  private hierarchy: Hierarchy | null = null;
  private inFlight = false;
  private onChange: () => void;

  constructor(
    private readonly api: ReviewApi,
    private readonly root: HTMLElement,
    onChange?: () => void,
  ) {
    this.onChange = onChange ?? (() => undefined);
    this.root.addEventListener("keydown", (ev) => this.handleKey(ev as KeyboardEvent));
  }

  async refresh(): Promise<void> {
    const [queue, hierarchy] = await Promise.all([
      this.api.fetchQueue(20),
      this.hierarchy ? Promise.resolve(this.hierarchy) : this.api.fetchHierarchy(),
    ]);
    this.hierarchy = hierarchy;
    this.items = queue.items.filter((i) => i.member_count === 1);
    this.render();
  }

  get current(): QueueItem | undefined {
    return this.items[0];
  }

  handleKey(ev: KeyboardEvent): void {
    if (this.inFlight || !this.current) return;
    if (ev.key === "a") this.decideFromUi("accept");
    else if (ev.key === "d") this.decideFromUi("discard");
    else if (ev.key === "o") this.toggleOverridePanel(true);
  }

  /** UI entry point: failures are surfaced in the card, never unhandled. */
  private decideFromUi(verdict: Verdict, main?: string, sub?: string): void {
    this.decide(verdict, main, sub).catch(() => undefined);
  }

  async decide(verdict: Verdict, main?: string, sub?: string): Promise<void> {
    const item = this.current;
    if (!item || this.inFlight) return;
    this.inFlight = true;
    this.lastError = null;
    this.render();
    try {
      await this.api.submitDecision({
        image_id: item.target_id,
        verdict,
        ...(verdict === "override" ? { main, sub } : {}),
      });
      // ack received: drop the card optimistically, server state agrees
      this.items = this.items.filter((i) => i.target_id !== item.target_id);
    } catch (err) {
      if (err instanceof ApiError && err.isConflict) {
        await this.refreshQueueOnly();
      } else {
        // keep the card so the decision can be retried, and surface the error
        this.lastError = String(err instanceof Error ? err.message : err);
        throw err;
      }
    } finally {
      this.inFlight = false;
      this.render();
      this.onChange();
    }
  }

  private async refreshQueueOnly(): Promise<void> {
    const queue = await this.api.fetchQueue(20);
    this.items = queue.items.filter((i) => i.member_count === 1);
  }

  private toggleOverridePanel(show: boolean): void {
    const panel = this.root.querySelector<HTMLElement>(".override-panel");
    if (panel) panel.style.display = show ? "block" : "none";
  }

  render(): void {
    this.root.textContent = "";
    const item = this.current;
    if (!item) {
      const done = document.createElement("p");
      done.className = "all-caught-up";
      done.textContent = "All caught up - the review queue is empty.";
      this.root.appendChild(done);
      return;
    }
    const remaining = document.createElement("p");
    remaining.className = "remaining";
    remaining.textContent = `${this.items.length} item(s) awaiting review`;
    this.root.appendChild(remaining);
    if (this.lastError) {
      const error = document.createElement("p");
      error.className = "decision-error";
      error.textContent = `Decision failed: ${this.lastError} - retry below.`;
      this.root.appendChild(error);
    }
    this.root.appendChild(this.renderCard(item));
  }

  private renderCard(item: QueueItem): HTMLElement {
    const card = document.createElement("div");
    card.className = "triage-card";
    card.dataset.imageId = item.target_id;

    const thumbs = document.createElement("div");
    thumbs.className = "thumbs";
    for (const [label, data] of [
      ["raw", item.thumbnail_raw],
      ["transformed", item.thumbnail_transformed],
    ] as const) {
      const fig = document.createElement("figure");
      const img = document.createElement("img");
      img.className = `thumb thumb-${label}`;
      img.src = `data:image/png;base64,${data}`;
      img.alt = `${label} image`;
      const cap = document.createElement("figcaption");
      cap.textContent = label;
      fig.append(img, cap);
      thumbs.appendChild(fig);
    }
    card.appendChild(thumbs);

    const predicted = document.createElement("p");
    predicted.className = "predicted-path";
    predicted.textContent =
      `${item.predicted.main_name} → ${item.predicted.sub_name}`;
    card.appendChild(predicted);

    const bar = document.createElement("div");
    bar.className = "confidence-bar";
    const fill = document.createElement("div");
    fill.className = "confidence-fill";
    fill.style.width = `${Math.round(item.confidence * 100)}%`;
    fill.title = item.confidence.toFixed(3);
    bar.appendChild(fill);
    card.appendChild(bar);

    const alts = document.createElement("ol");
    alts.className = "alternatives";
    for (const alt of item.alternatives.slice(0, 3)) {
      const li = document.createElement("li");
      li.textContent =
        `${alt.main_name} → ${alt.sub_name} (${alt.total.toFixed(3)})`;
      alts.appendChild(li);
    }
    card.appendChild(alts);

    card.appendChild(this.renderControls());
    card.appendChild(this.renderOverridePanel());
    return card;
  }

  private renderControls(): HTMLElement {
    const controls = document.createElement("div");
    controls.className = "controls";
    const buttons: Array<[string, string, () => void]> = [
      ["accept", "Accept (a)", () => this.decideFromUi("accept")],
      ["override", "Override (o)", () => this.toggleOverridePanel(true)],
      ["discard", "Discard (d)", () => this.decideFromUi("discard")],
    ];
    for (const [cls, label, handler] of buttons) {
      const btn = document.createElement("button");
      btn.className = `btn btn-${cls}`;
      btn.textContent = label;
      btn.disabled = this.inFlight;
      btn.addEventListener("click", handler);
      controls.appendChild(btn);
    }
    return controls;
  }

  /** Override targets come exclusively from the hierarchy endpoint. */
  private renderOverridePanel(): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "override-panel";
    panel.style.display = "none";
    const select = document.createElement("select");
    select.className = "override-select";
    for (const cat of this.hierarchy?.categories ?? []) {
      for (const sub of cat.subcategories) {
        const option = document.createElement("option");
        option.value = JSON.stringify([cat.name, sub.name]);
        option.textContent = `${cat.name} → ${sub.name}`;
        select.appendChild(option);
      }
    }
    const confirm = document.createElement("button");
    confirm.className = "btn btn-confirm-override";
    confirm.textContent = "Confirm override";
    confirm.disabled = this.inFlight;
    confirm.addEventListener("click", () => {
      const [main, sub] = JSON.parse(select.value) as [string, string];
      this.decideFromUi("override", main, sub);
    });
    panel.append(select, confirm);
    return panel;
  }
}
