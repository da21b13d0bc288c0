import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { AnnotationApp, LABELS } from "../src/app.js";
import { FixtureServer, makeTasks } from "./fixture_server.js";

function client(server: FixtureServer): ApiClient {
  return new ApiClient("", {
    fetchImpl: server.fetch,
    backoffMs: [1, 1, 1],
    sleep: async () => {},
  });
}

async function startApp(
  server: FixtureServer,
  options: { confirmMode?: boolean } = {},
): Promise<{ app: AnnotationApp; root: HTMLElement }> {
  const root = document.getElementById("app") as HTMLElement;
  const app = new AnnotationApp(root, client(server), "ana", options);
  await app.start();
  return { app, root };
}

function pressKey(key: string): void {
  document.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true }));
}

async function settle(): Promise<void> {
  // let the promise chains started by the key handler finish
  for (let i = 0; i < 20; i += 1) await Promise.resolve();
  await new Promise((resolve) => setTimeout(resolve, 0));
}

beforeEach(() => {
  document.body.innerHTML = '<main id="app"></main>';
});

describe("task rendering", () => {
  it("shows premise above hypothesis with four enabled buttons", async () => {
    const server = new FixtureServer(makeTasks(3));
    const { root } = await startApp(server);
    const premise = root.querySelector("#premise")!;
    const hypothesis = root.querySelector("#hypothesis")!;
    expect(premise.textContent).toContain("Premisa numărul 0");
    expect(hypothesis.textContent).toContain("Ipoteza numărul 0");
    expect(
      premise.compareDocumentPosition(hypothesis) &
        Node.DOCUMENT_POSITION_FOLLOWING,
    ).toBeTruthy();
    const buttons = [...root.querySelectorAll<HTMLButtonElement>(".label-button")];
    expect(buttons).toHaveLength(4);
    expect(buttons.map((b) => b.dataset.label)).toEqual([...LABELS]);
    expect(buttons.every((b) => !b.disabled)).toBe(true);
    const guidelines = root.querySelector<HTMLDetailsElement>("#guidelines")!;
    expect(guidelines.open).toBe(false); // collapsed by default
    expect(guidelines.textContent).toContain("Judge the pair.");
  });

  it("renders markup-like task text as plain text", async () => {
    const tasks = makeTasks(1);
    tasks[0]!.premise = '<img src=x onerror="window.pwned=true">&amp;';
    const server = new FixtureServer(tasks);
    const { root } = await startApp(server);
    expect(root.querySelector("img")).toBeNull();
    expect(root.querySelector("#premise")!.textContent).toContain("<img");
    expect((window as unknown as { pwned?: boolean }).pwned).toBeUndefined();
  });

  it("shows the campaign-complete state on 204", async () => {
    const server = new FixtureServer([]);
    const { root } = await startApp(server);
    const banner = root.querySelector<HTMLElement>("#banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("campaign complete");
  });
});

describe("submitting", () => {
  it('key "1" posts {"label":"contrastive"}', async () => {
    const server = new FixtureServer(makeTasks(2));
    await startApp(server);
    pressKey("1");
    await settle();
    expect(server.deliveredPosts).toHaveLength(1);
    expect(server.deliveredPosts[0]!.body).toEqual({
      annotator: "ana",
      label: "contrastive",
    });
  });

  it("keys 2-4 map to reasoning / entailment / neutral", async () => {
    const server = new FixtureServer(makeTasks(3));
    await startApp(server);
    for (const key of ["2", "3", "4"]) {
      pressKey(key);
      await settle();
    }
    expect(server.deliveredPosts.map((p) => p.body.label)).toEqual([
      "reasoning",
      "entailment",
      "neutral",
    ]);
  });

  it("completes a 10-task campaign with exactly 10 label POSTs", async () => {
    const server = new FixtureServer(makeTasks(10));
    const { root } = await startApp(server);
    for (let i = 0; i < 10; i += 1) {
      pressKey(String((i % 4) + 1));
      await settle();
    }
    expect(server.deliveredPosts).toHaveLength(10);
    expect(new Set(server.deliveredPosts.map((p) => p.taskId)).size).toBe(10);
    const banner = root.querySelector<HTMLElement>("#banner")!;
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toContain("campaign complete");
    // extra key presses after completion never POST again
    pressKey("1");
    await settle();
    expect(server.deliveredPosts).toHaveLength(10);
  });

  it("surfaces a 409 as a toast and advances to the next task", async () => {
    const tasks = makeTasks(2);
    const server = new FixtureServer(tasks);
    server.conflictTasks.add("task-0");
    const { root } = await startApp(server);
    pressKey("1");
    await settle();
    const toast = root.querySelector<HTMLElement>("#toast")!;
    expect(toast.hidden).toBe(false);
    expect(toast.textContent).toContain("already recorded");
    expect(root.querySelector("#premise")!.textContent).toContain("numărul 1");
  });

  it("delivers exactly one POST when the network fails before delivery", async () => {
    const server = new FixtureServer(makeTasks(1));
    await startApp(server);
    server.networkFailures = 2; // offline, then online
    pressKey("1");
    await settle();
    await settle();
    expect(server.deliveredPosts).toHaveLength(1);
  });

  it("rapid double key press still posts once per task", async () => {
    const server = new FixtureServer(makeTasks(1));
    await startApp(server);
    pressKey("1");
    pressKey("2");
    await settle();
    expect(server.deliveredPosts).toHaveLength(1);
  });

  it("confirmation mode stages on key and submits on Enter", async () => {
    const server = new FixtureServer(makeTasks(1));
    await startApp(server, { confirmMode: true });
    pressKey("3");
    await settle();
    expect(server.deliveredPosts).toHaveLength(0);
    pressKey("Enter");
    await settle();
    expect(server.deliveredPosts).toHaveLength(1);
    expect(server.deliveredPosts[0]!.body.label).toBe("entailment");
  });
});

describe("progress", () => {
  it("shows done/total and refreshes after each submission", async () => {
    const server = new FixtureServer(makeTasks(10));
    const { root } = await startApp(server);
    const progress = root.querySelector<HTMLElement>("#progress")!;
    expect(progress.textContent).toBe("0 / 10 complete");
    pressKey("1");
    await settle();
    expect(progress.textContent).toBe("1 / 10 complete");
  });

  it("marks progress stale on endpoint failure without crashing", async () => {
    const server = new FixtureServer(makeTasks(2));
    const { root } = await startApp(server);
    server.failProgress = true;
    pressKey("1");
    await settle();
    const progress = root.querySelector<HTMLElement>("#progress")!;
    expect(progress.classList.contains("stale")).toBe(true);
    expect(root.querySelector("#premise")!.textContent).toContain("numărul 1");
  });
});

describe("label isolation", () => {
  it("no rendered view ever contains an automatic label or cue", async () => {
    const tasks = makeTasks(10);
    const server = new FixtureServer(tasks);
    const { root } = await startApp(server);
    const forbidden = tasks.flatMap((t) => [t.autoLabel, t.cue]);
    const scan = () => {
      const html = root.innerHTML;
      for (const secret of forbidden) {
        expect(html).not.toContain(secret);
      }
    };
    scan();
    for (let i = 0; i < 10; i += 1) {
      pressKey("1");
      await settle();
      scan();
    }
  });
});
