import { beforeEach, describe, expect, it } from "vitest";

import { AnnotationScreen } from "../src/annotation.js";
import { ApiClient } from "../src/api.js";
import type { NextInstance } from "../src/types.js";
import { MockFetch } from "./mockFetch.js";

function instancePayload(id: string, remaining: number): NextInstance {
  return {
    done: false,
    remaining,
    instance_id: id,
    first: {
      use_id: id.split("--")[0],
      lemma: "arm",
      context: "the arm here",
      span: "4:7",
      target: "arm",
      grouping: "t1",
      date: null,
    },
    second: {
      use_id: id.split("--")[1],
      lemma: "arm",
      context: "an arm there",
      span: "3:6",
      target: "arm",
      grouping: "t2",
      date: null,
    },
  };
}

describe("annotation screen", () => {
  let mock: MockFetch;
  let screen: AnnotationScreen;

  beforeEach(() => {
    mock = new MockFetch();
    const api = new ApiClient("http://service.test", mock.fetch);
    api.setCredentials({ name: "anna", token: "tok" });
    screen = new AnnotationScreen(api, "proj", "arm");
  });

  it.each([1, 2, 3, 4])("submits scale level %i as given", async (label) => {
    mock.on("GET /projects/proj/words/arm/next", {
      json: instancePayload("a--b", 5),
    });
    mock.on("POST /judgments", { json: { stored: true } });
    await screen.load();
    await screen.submit(label);
    const [submitted] = mock.sent("POST", "/judgments");
    expect(submitted.body).toEqual({
      project_id: "proj",
      word: "arm",
      instance_id: "a--b",
      label,
      comment: "",
    });
    expect(submitted.headers["x-annotator"]).toBe("anna");
  });

  it("submits Cannot decide as label 0", async () => {
    mock.on("GET /projects/proj/words/arm/next", { json: instancePayload("a--b", 5) });
    mock.on("POST /judgments", { json: { stored: true } });
    await screen.load();
    await screen.submit(0, "unclear sentence");
    expect(mock.sent("POST", "/judgments")[0].body).toMatchObject({
      label: 0,
      comment: "unclear sentence",
    });
  });

  it("rejects labels off the scale without touching the network", async () => {
    mock.on("GET /projects/proj/words/arm/next", { json: instancePayload("a--b", 5) });
    await screen.load();
    await expect(screen.submit(7)).rejects.toThrow(/not a scale label/);
    expect(mock.sent("POST", "/judgments")).toHaveLength(0);
  });

  it("advances to the next pair after a successful submit", async () => {
    const queue = [instancePayload("a--b", 2), instancePayload("a--c", 1)];
    mock.on("GET /projects/proj/words/arm/next", () => ({ json: queue.shift()! }));
    mock.on("POST /judgments", { json: { stored: true } });
    await screen.load();
    await screen.submit(3);
    expect(screen.current?.instance_id).toBe("a--c");
    expect(screen.remaining).toBe(1);
  });

  it("shows done when the sequence is exhausted", async () => {
    mock.on("GET /projects/proj/words/arm/next", { json: { done: true, remaining: 0 } });
    await screen.load();
    expect(screen.state).toBe("done");
  });

  it("keeps the judgment for retry when submission fails", async () => {
    let failures = 1;
    mock.on("GET /projects/proj/words/arm/next", { json: instancePayload("a--b", 1) });
    mock.on("POST /judgments", () =>
      failures-- > 0 ? { status: 500, json: { detail: "boom" } } : { json: { stored: true } },
    );
    await screen.load();
    await screen.submit(2, "note");
    expect(screen.state).toBe("error");
    expect(screen.pendingRetry).toEqual({ label: 2, comment: "note" });
    await screen.retry();
    expect(screen.pendingRetry).toBeNull();
    const bodies = mock.sent("POST", "/judgments").map((r) => r.body);
    expect(bodies).toHaveLength(2);
    expect(bodies[0]).toEqual(bodies[1]);
  });

  it("locks when the server refuses access", async () => {
    mock.on("GET /projects/proj/words/arm/next", {
      status: 403,
      json: { detail: "tutorial not passed" },
    });
    await screen.load();
    expect(screen.state).toBe("locked");
    expect(screen.lastError).toMatch(/tutorial/);
  });
});
