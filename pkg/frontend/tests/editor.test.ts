import { describe, expect, it } from "vitest";
import { ApiClient, LatestOnly } from "../src/api.js";
import { Editor, ViewModel } from "../src/editor.js";
import type { ShapeDetail } from "../src/types.js";

function makeShape(id: string, nHandles = 4): ShapeDetail {
  return {
    id,
    points: [
      [0, 0, 0],
      [0.1, 0.1, 0.1],
    ],
    parts: [
      {
        center: [0, 0, 0],
        axes: [
          [1, 0, 0],
          [0, 1, 0],
          [0, 0, 1],
        ],
        extents: [0.1, 0.1, 0.1],
        point_ids: [0, 1],
      },
    ],
    handles: Array.from({ length: nHandles }, (_, i) => ({
      part: 0,
      kind: i % 2 === 0 ? ("translation" as const) : ("scale" as const),
      axis: i % 3,
    })),
    defaults: Array.from({ length: nHandles }, (_, i) => (i % 2 === 0 ? 0 : 1)),
    lower_bounds: Array.from({ length: nHandles }, (_, i) => (i % 2 === 0 ? null : 0)),
  };
}

interface Recorded {
  url: string;
  body: unknown;
}

/** Deterministic fake service: projected points encode the request payload. */
function makeApi(shape: ShapeDetail, log: Recorded[] = []) {
  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    log.push({ url, body });
    if (url.endsWith(`/api/shapes/${shape.id}`)) {
      return Response.json(shape);
    }
    if (url.endsWith("/project")) {
      const edits = body.edits as { handle: number; value: number }[];
      const zHat = [...shape.defaults];
      for (const e of edits) zHat[e.handle] = e.value;
      // payload-dependent marker cloud: the editor must display it verbatim
      const points = [[edits.length, edits[0]?.value ?? 0, 0.5]];
      return Response.json({ z_hat: zHat, points });
    }
    if (url.endsWith("/api/transfer")) {
      return Response.json({ points: [[9, 9, body.dst.length]] });
    }
    throw new Error(`unexpected ${url}`);
  };
  return new ApiClient(fetchImpl);
}

async function settle(): Promise<void> {
  for (let i = 0; i < 4; i++) await new Promise((r) => setTimeout(r, 0));
}

describe("Editor", () => {
  it("selecting a shape renders its rest cloud verbatim", async () => {
    const shape = makeShape("s0");
    const views: ViewModel[] = [];
    const editor = new Editor(makeApi(shape), (v) => views.push(v), 0);
    await editor.selectShape("s0");
    expect(views).toHaveLength(1);
    expect(views[0].raw).toEqual(shape.points);
    expect(views[0].projected).toEqual(shape.points);
  });

  it("slider change issues raw + single-handle projections and renders payloads verbatim", async () => {
    const shape = makeShape("s0");
    const log: Recorded[] = [];
    const views: ViewModel[] = [];
    const editor = new Editor(makeApi(shape, log), (v) => views.push(v), 0);
    await editor.selectShape("s0");
    editor.onSliderChange(2, 0.4);
    await settle();
    const projects = log.filter((r) => r.url.endsWith("/project"));
    expect(projects).toHaveLength(2);
    const bodies = projects.map((r) => (r.body as { edits: unknown[] }).edits.length);
    expect(bodies.sort()).toEqual([1, 4]); // all-handles raw + one-handle projected
    const last = views.at(-1)!;
    expect(last.raw).toEqual([[4, 0, 0.5]]); // marker from the 4-edit request
    expect(last.projected).toEqual([[1, 0.4, 0.5]]); // marker from the 1-edit request
    expect(last.zHat![2]).toBe(0.4);
  });

  it("clamps scale sliders at zero before any request", async () => {
    const shape = makeShape("s0");
    const log: Recorded[] = [];
    const editor = new Editor(makeApi(shape, log), () => {}, 0);
    await editor.selectShape("s0");
    editor.onSliderChange(1, -3.0); // scale handle, lower bound 0
    await settle();
    expect(editor.state.sliders[1]).toBe(0);
    const single = log.find(
      (r) => r.url.endsWith("/project") && (r.body as { edits: unknown[] }).edits.length === 1,
    );
    expect((single!.body as { edits: { value: number }[] }).edits[0].value).toBe(0);
  });

  it("renders one strip entry per transfer target", async () => {
    const shape = makeShape("s0");
    const views: ViewModel[] = [];
    const editor = new Editor(makeApi(shape), (v) => views.push(v), 0);
    await editor.selectShape("s0");
    editor.setTransferTargets(["a", "bb", "ccc"]);
    editor.onSliderChange(0, 0.2);
    await settle();
    const last = views.at(-1)!;
    expect(last.transferred.map((t) => t.id)).toEqual(["a", "bb", "ccc"]);
    expect(last.transferred[2].points).toEqual([[9, 9, 3]]);
  });

  it("discards stale responses during a scrub", async () => {
    const shape = makeShape("s0");
    const resolvers: ((r: Response) => void)[] = [];
    const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
      if (url.endsWith(`/api/shapes/${shape.id}`)) return Response.json(shape);
      const body = init?.body ? JSON.parse(String(init.body)) : { edits: [] };
      const value = body.edits?.[0]?.value ?? 0;
      return new Promise((resolve) => {
        resolvers.push(() =>
          resolve(Response.json({ z_hat: shape.defaults, points: [[value, 0, 0]] })),
        );
      });
    };
    const views: ViewModel[] = [];
    const editor = new Editor(new ApiClient(fetchImpl), (v) => views.push(v), 0);
    await editor.selectShape("s0");
    views.length = 0;
    editor.onSliderChange(0, 0.1); // request pair A
    await Promise.resolve();
    editor.onSliderChange(0, 0.9); // request pair B supersedes A
    await Promise.resolve();
    // resolve everything, oldest first
    while (resolvers.length) resolvers.shift()!(undefined as never);
    await settle();
    expect(views).toHaveLength(1); // A was discarded even though it resolved
    expect(views[0].projected).toEqual([[0.9, 0, 0]]);
  });

  it("replaying a recorded interaction script reproduces the same final state", async () => {
    const script: [number, number][] = [
      [0, 0.3],
      [1, 1.4],
      [2, -0.2],
      [1, 0.8],
      [3, 0.0],
    ];
    const runs: ViewModel[] = [];
    for (let rep = 0; rep < 2; rep++) {
      const shape = makeShape("s0");
      const views: ViewModel[] = [];
      const editor = new Editor(makeApi(shape), (v) => views.push(v), 0);
      await editor.selectShape("s0");
      editor.setTransferTargets(["t1"]);
      for (const [h, v] of script) {
        editor.onSliderChange(h, v);
        await settle();
      }
      runs.push(views.at(-1)!);
      expect(editor.state.sliders).toEqual([0.3, 0.8, -0.2, 0]);
    }
    expect(JSON.stringify(runs[0])).toBe(JSON.stringify(runs[1]));
  });
});

describe("LatestOnly", () => {
  it("returns null for superseded tasks", async () => {
    const latest = new LatestOnly();
    let release1!: () => void;
    const p1 = latest.run(
      () => new Promise<string>((res) => (release1 = () => res("one"))),
    );
    const p2 = latest.run(async () => "two");
    release1();
    expect(await p1).toBeNull();
    expect(await p2).toBe("two");
  });
});
