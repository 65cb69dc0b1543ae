import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { ReviewApi } from "../src/api.js";
import { ClusterView } from "../src/clusters.js";
import { FixtureServer } from "./fixture_server.js";

describe("cluster view", () => {
  let server: FixtureServer;
  let root: HTMLElement;
  let view: ClusterView;

  beforeEach(async () => {
    server = new FixtureServer();
    for (let c = 0; c < 10; c++) server.seedCluster(c, 10);
    await server.start();
    root = document.createElement("div");
    document.body.appendChild(root);
    view = new ClusterView(new ReviewApi(server.url), root);
    await view.refresh();
  });

  afterEach(async () => {
    root.remove();
    await server.stop();
  });

  it("renders one card per cluster with member counts", () => {
    const cards = root.querySelectorAll(".cluster-card");
    expect(cards).toHaveLength(10);
    expect(cards[0]!.querySelector("h3")?.textContent).toContain("10 members");
    expect(cards[0]!.querySelectorAll(".member-thumb")).toHaveLength(10);
  });

  it("bulk decision resolves every member through one POST", async () => {
    const first = view.clusters[0]!;
    await view.decide(first, "discard");
    expect(server.log).toHaveLength(10);
    expect(new Set(server.log.map((d) => d.action))).toEqual(new Set(["discard"]));
    expect(root.querySelectorAll(".cluster-card")).toHaveLength(9);
  });

  it("paginates member grids beyond 50", async () => {
    await server.stop();
    server = new FixtureServer();
    server.seedCluster(0, 120);
    await server.start();
    view = new ClusterView(new ReviewApi(server.url), root);
    await view.refresh();
    expect(root.querySelectorAll(".member-thumb")).toHaveLength(50);
    const pager = root.querySelectorAll(".btn-page");
    expect(pager).toHaveLength(3); // 120 members -> 3 pages
    view.setPage("cluster:0", 2);
    expect(root.querySelectorAll(".member-thumb")).toHaveLength(20);
  });
});
