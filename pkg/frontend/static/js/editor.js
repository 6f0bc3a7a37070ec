import { LatestOnly } from "./api.js";
import { rateLimited } from "./debounce.js";
import { clampValue, initialState } from "./state.js";
const REQUEST_INTERVAL_MS = 100; // <= 10 requests per second while scrubbing
/**
 * Headless editor logic: holds state, talks to the API, and pushes view
 * models to a render callback. The UI never computes geometry itself; the
 * "raw edit" cloud is obtained by asking the service to project with every
 * handle fixed, which returns the edited shape verbatim.
 */
export class Editor {
    constructor(api, render, intervalMs = REQUEST_INTERVAL_MS) {
        this.api = api;
        this.render = render;
        this.state = initialState();
        this.shape = null;
        this.latest = new LatestOnly();
        this.lastResult = null;
        this.scheduled = rateLimited((handle, value) => void this.refresh(handle, value), intervalMs);
    }
    async selectShape(id) {
        this.scheduled.cancel();
        this.shape = await this.api.shape(id);
        this.state.shapeId = id;
        this.state.sliders = [...this.shape.defaults];
        this.lastResult = null;
        this.render(this.viewModel(null, null, []));
    }
    setTransferTargets(ids) {
        this.state.transferTargets = [...ids];
    }
    toggleBoxes(show) {
        this.state.settings.showBoxes = show;
        if (this.lastResult) {
            this.render(this.viewModel(this.lastResult.raw, this.lastResult.projected, this.lastResult.transferred));
        }
        else if (this.shape) {
            this.render(this.viewModel(null, null, []));
        }
    }
    /** Slider input: clamp, record, and schedule a rate-limited refresh. */
    onSliderChange(handle, value) {
        if (!this.shape)
            return;
        const clamped = clampValue(value, this.shape.lower_bounds[handle]);
        this.state.sliders[handle] = clamped;
        this.scheduled(handle, clamped);
    }
    /** One edit round-trip: raw view, projected view, then transfers. */
    async refresh(handle, value) {
        const shape = this.shape;
        if (!shape)
            return;
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
        if (result === null)
            return; // superseded by a newer slider value
        this.lastResult = result;
        this.render(this.viewModel(result.raw, result.projected, result.transferred));
    }
    viewModel(raw, projected, transferred) {
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
