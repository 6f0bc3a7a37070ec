import { ApiClient, LatestOnly } from "./api.js";
import { rateLimited } from "./debounce.js";
import { clampValue, EditorState, initialState } from "./state.js";
import type { ProjectResponse, ShapeDetail } from "./types.js";

export interface ViewModel {
  shape: ShapeDetail | null;
  /** the literal user edit, served by the API with every handle pinned */
  raw: number[][] | null;
  /** the plausible-space projection of the edit */
  projected: number[][] | null;
  zHat: number[] | null;
  transferred: { id: string; points: number[][] }[];
  showBoxes: boolean;
}

const REQUEST_INTERVAL_MS = 100; // <= 10 requests per second while scrubbing

/**
 * Headless editor logic: holds state, talks to the API, and pushes view
 * models to a render callback. The UI never computes geometry itself; the
 * "raw edit" cloud is obtained by asking the service to project with every
 * handle fixed, which returns the edited shape verbatim.
 */
export class Editor {
  state: EditorState = initialState();
  shape: ShapeDetail | null = null;
  private latest = new LatestOnly();
  private scheduled: ((handle: number, value: number) => void) & { cancel(): void };
  private lastResult: {
    raw: ProjectResponse;
    projected: ProjectResponse;
    transferred: { id: string; points: number[][] }[];
  } | null = null;

  constructor(
    private api: ApiClient,
    private render: (view: ViewModel) => void,
    intervalMs: number = REQUEST_INTERVAL_MS,
  ) {
    this.scheduled = rateLimited(
      (handle: number, value: number) => void this.refresh(handle, value),
      intervalMs,
    );
  }

  async selectShape(id: string): Promise<void> {
    this.scheduled.cancel();
    this.shape = await this.api.shape(id);
    this.state.shapeId = id;
    this.state.sliders = [...this.shape.defaults];
    this.lastResult = null;
    this.render(this.viewModel(null, null, []));
  }

  setTransferTargets(ids: string[]): void {
    this.state.transferTargets = [...ids];
  }

  toggleBoxes(show: boolean): void {
    this.state.settings.showBoxes = show;
    if (this.lastResult) {
      this.render(
        this.viewModel(this.lastResult.raw, this.lastResult.projected, this.lastResult.transferred),
      );
    } else if (this.shape) {
      this.render(this.viewModel(null, null, []));
    }
  }

  /** Slider input: clamp, record, and schedule a rate-limited refresh. */
  onSliderChange(handle: number, value: number): void {
    if (!this.shape) return;
    const clamped = clampValue(value, this.shape.lower_bounds[handle]);
    this.state.sliders[handle] = clamped;
    this.scheduled(handle, clamped);
  }

  /** One edit round-trip: raw view, projected view, then transfers. */
  private async refresh(handle: number, value: number): Promise<void> {
    const shape = this.shape;
    if (!shape) return;
    const result = await this.latest.run(async () => {
      const rawEdit = shape.handles.map((_, i) => ({
        handle: i,
        value: this.state.sliders[i],
      }));
      const [raw, projected] = await Promise.all([
        this.api.project(shape.id, rawEdit),
        this.api.project(shape.id, [{ handle, value }]),
      ]);
      const transferred = [];
      for (const dst of this.state.transferTargets) {
        const out = await this.api.transfer(shape.id, projected.z_hat, dst);
        transferred.push({ id: dst, points: out.points });
      }
      return { raw, projected, transferred };
    });
    if (result === null) return; // superseded by a newer slider value
    this.lastResult = result;
    this.render(this.viewModel(result.raw, result.projected, result.transferred));
  }

  private viewModel(
    raw: ProjectResponse | null,
    projected: ProjectResponse | null,
    transferred: { id: string; points: number[][] }[],
  ): ViewModel {
    return {
      shape: this.shape,
      raw: raw ? raw.points : this.shape ? this.shape.points : null,
      projected: projected ? projected.points : this.shape ? this.shape.points : null,
      zHat: projected ? projected.z_hat : null,
      transferred,
      showBoxes: this.state.settings.showBoxes,
    };
  }
}
