import { ApiError, ReviewApi } from "./api.js";
import type { QueueItem, Verdict } from "./types.js";

const MEMBERS_PER_PAGE = 50;

/**
 * Fast-batch flow: one card per cluster, a representative thumbnail grid
 * (paginated past 50 members), and a single bulk decision that the server
 * applies to every member.
 */
export class ClusterView {
  clusters: QueueItem[] = [];
  private pages = new Map<string, number>();
  private inFlight = false;
  private onChange: () => void;

  constructor(
    private readonly api: ReviewApi,
    private readonly root: HTMLElement,
    onChange?: () => void,
  ) {
    this.onChange = onChange ?? (() => undefined);
  }

  async refresh(): Promise<void> {
    const queue = await this.api.fetchQueue(50, "fast");
    this.clusters = queue.items;
    this.render();
  }

  async decide(cluster: QueueItem, verdict: Verdict): Promise<void> {
    if (this.inFlight) return;
    this.inFlight = true;
    this.render();
    try {
      const ack = await this.api.submitDecision({
        cluster_id: cluster.target_id,
        verdict,
      });
      if (ack.applied !== cluster.member_count) {
        // server resolved fewer/more members than shown: refetch the truth
        await this.refresh();
      }
      this.clusters = this.clusters.filter(
        (c) => c.target_id !== cluster.target_id,
      );
    } catch (err) {
      if (err instanceof ApiError && err.isConflict) {
        await this.refresh();
      } else {
        throw err;
      }
    } finally {
      this.inFlight = false;
      this.render();
      this.onChange();
    }
  }

  setPage(targetId: string, page: number): void {
    this.pages.set(targetId, page);
    this.render();
  }

  render(): void {
    this.root.textContent = "";
    if (this.clusters.length === 0) {
      const done = document.createElement("p");
      done.className = "all-caught-up";
      done.textContent = "No clusters awaiting decisions.";
      this.root.appendChild(done);
      return;
    }
    for (const cluster of this.clusters) {
      this.root.appendChild(this.renderCluster(cluster));
    }
  }

  private renderCluster(cluster: QueueItem): HTMLElement {
    const card = document.createElement("div");
    card.className = "cluster-card";
    card.dataset.clusterId = cluster.target_id;

    const header = document.createElement("h3");
    header.textContent =
      `Cluster ${cluster.cluster_id} · ${cluster.member_count} members · ` +
      `${cluster.predicted.main_name} → ${cluster.predicted.sub_name}`;
    card.appendChild(header);

    const page = this.pages.get(cluster.target_id) ?? 0;
    const start = page * MEMBERS_PER_PAGE;
    const members = cluster.member_ids.slice(start, start + MEMBERS_PER_PAGE);
    const grid = document.createElement("div");
    grid.className = "member-grid";
    for (const memberId of members) {
      const img = document.createElement("img");
      img.className = "member-thumb";
      img.src = this.api.imageUrl(memberId, "transformed");
      img.alt = memberId.slice(0, 8);
      grid.appendChild(img);
    }
    card.appendChild(grid);

    const totalPages = Math.ceil(cluster.member_ids.length / MEMBERS_PER_PAGE);
    if (totalPages > 1) {
      const pager = document.createElement("div");
      pager.className = "pager";
      for (let p = 0; p < totalPages; p++) {
        const btn = document.createElement("button");
        btn.className = "btn btn-page" + (p === page ? " active" : "");
        btn.textContent = String(p + 1);
        btn.addEventListener("click", () => this.setPage(cluster.target_id, p));
        pager.appendChild(btn);
      }
      card.appendChild(pager);
    }

    const controls = document.createElement("div");
    controls.className = "controls";
    for (const [verdict, label] of [
      ["accept", "Accept all"],
      ["discard", "Discard all"],
    ] as const) {
      const btn = document.createElement("button");
      btn.className = `btn btn-${verdict}`;
      btn.textContent = label;
      btn.disabled = this.inFlight;
      btn.addEventListener("click", () => void this.decide(cluster, verdict));
      controls.appendChild(btn);
    }
    card.appendChild(controls);
    return card;
  }
}
