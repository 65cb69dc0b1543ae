import { ReviewApi } from "./api.js";
import { ClusterView } from "./clusters.js";
import { StatsView } from "./stats.js";
import { TriageView } from "./triage.js";

const TABS = ["triage", "clusters", "stats"] as const;
type Tab = (typeof TABS)[number];

/**
 * Shell around the three views: tab switching, a shared polling loop
 * (2 s default) and an offline banner with retry instead of silent loss.
 */
export class App {
  readonly triage: TriageView;
  readonly clusters: ClusterView;
  readonly stats: StatsView;
  activeTab: Tab = "triage";
  private timer: ReturnType<typeof setInterval> | null = null;
  private banner: HTMLElement;
  private panes = new Map<Tab, HTMLElement>();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ReviewApi,
  ) {
    this.banner = document.createElement("div");
    this.banner.className = "offline-banner";
    this.banner.style.display = "none";
    root.appendChild(this.banner);

    const nav = document.createElement("nav");
    nav.className = "tabs";
    for (const tab of TABS) {
      const btn = document.createElement("button");
      btn.className = `tab tab-${tab}`;
      btn.textContent = tab;
      btn.addEventListener("click", () => this.showTab(tab));
      nav.appendChild(btn);
    }
    root.appendChild(nav);

    for (const tab of TABS) {
      const pane = document.createElement("section");
      pane.className = `pane pane-${tab}`;
      pane.tabIndex = -1; // focusable so key shortcuts land somewhere sane
      root.appendChild(pane);
      this.panes.set(tab, pane);
    }
    const refreshStats = () => void this.safeRefresh(() => this.stats.refresh());
    this.triage = new TriageView(this.api, this.panes.get("triage")!, refreshStats);
    this.clusters = new ClusterView(this.api, this.panes.get("clusters")!, refreshStats);
    this.stats = new StatsView(this.api, this.panes.get("stats")!);
    this.showTab("triage");
  }

  showTab(tab: Tab): void {
    this.activeTab = tab;
    for (const [name, pane] of this.panes) {
      pane.style.display = name === tab ? "block" : "none";
    }
  }

  async pollOnce(): Promise<void> {
    await this.safeRefresh(async () => {
      await this.triage.refresh();
      await this.clusters.refresh();
      await this.stats.refresh();
    });
  }

  private async safeRefresh(fn: () => Promise<void>): Promise<void> {
    try {
      await fn();
      this.banner.style.display = "none";
      this.banner.textContent = "";
    } catch (err) {
      this.banner.textContent =
        `Review server unreachable (${String(err)}); retrying…`;
      this.banner.style.display = "block";
    }
  }

  start(pollMs = 2000): void {
    void this.pollOnce();
    this.timer = setInterval(() => void this.pollOnce(), pollMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
