import { ReviewApi } from "./api.js";
import type { Stats } from "./types.js";

/** Dashboard: per-class bars, entropy gauge, routing tallies, queue depth. */
export class StatsView {
  stats: Stats | null = null;

  constructor(
    private readonly api: ReviewApi,
    private readonly root: HTMLElement,
  ) {}

  async refresh(): Promise<void> {
    this.stats = await this.api.fetchStats();
    this.render();
  }

  render(): void {
    this.root.textContent = "";
    const s = this.stats;
    if (!s) return;

    const depth = document.createElement("p");
    depth.className = "queue-depth";
    depth.textContent = `Queue depth: ${s.queue_depth}`;
    this.root.appendChild(depth);

    const chart = document.createElement("div");
    chart.className = "class-chart";
    const max = Math.max(1, ...Object.values(s.per_class_counts));
    for (const [name, count] of Object.entries(s.per_class_counts)) {
      const row = document.createElement("div");
      row.className = "class-row";
      const label = document.createElement("span");
      label.className = "class-label";
      label.textContent = `${name} (${count})`;
      const bar = document.createElement("div");
      bar.className = "class-bar";
      bar.style.width = `${Math.round((count / max) * 100)}%`;
      row.append(label, bar);
      chart.appendChild(row);
    }
    this.root.appendChild(chart);

    const entropy = document.createElement("div");
    entropy.className = "entropy-gauge";
    entropy.textContent =
      s.normalized_entropy === null
        ? "Class balance: n/a (nothing kept yet)"
        : `Class balance: ${(s.normalized_entropy * 100).toFixed(0)}%`;
    if (s.normalized_entropy !== null) {
      entropy.dataset.value = s.normalized_entropy.toFixed(4);
    }
    this.root.appendChild(entropy);

    const tallies = document.createElement("ul");
    tallies.className = "tallies";
    for (const [key, value] of [
      ["auto", s.tallies.auto],
      ["review", s.tallies.review],
      ["remove", s.tallies.remove],
      ["kept", s.kept],
      ["discarded", s.discarded],
    ] as const) {
      const li = document.createElement("li");
      li.className = `tally tally-${key}`;
      li.textContent = `${key}: ${value}`;
      tallies.appendChild(li);
    }
    this.root.appendChild(tallies);

    const agent = document.createElement("p");
    agent.className = "agent-line";
    agent.textContent =
      `agent ε = ${s.epsilon.toFixed(4)} · ` +
      `probe accuracy = ${(s.probe_accuracy * 100).toFixed(1)}%`;
    this.root.appendChild(agent);
  }
}
