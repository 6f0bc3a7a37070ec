import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { rateLimited } from "../src/debounce.js";

describe("rateLimited", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("runs immediately when idle", () => {
    const calls: number[] = [];
    const fn = rateLimited((v: number) => calls.push(v), 100);
    fn(1);
    expect(calls).toEqual([1]);
  });

  it("coalesces a burst to first + trailing latest", () => {
    const calls: number[] = [];
    const fn = rateLimited((v: number) => calls.push(v), 100);
    for (let i = 0; i < 20; i++) fn(i);
    expect(calls).toEqual([0]);
    vi.advanceTimersByTime(100);
    expect(calls).toEqual([0, 19]);
  });

  it("never exceeds the rate over a long scrub", () => {
    const stamps: number[] = [];
    const fn = rateLimited(() => stamps.push(Date.now()), 100);
    for (let t = 0; t < 1000; t += 5) {
      fn(t);
      vi.advanceTimersByTime(5);
    }
    vi.advanceTimersByTime(200);
    expect(stamps.length).toBeLessThanOrEqual(11); // <= 10/s plus the leading call
    for (let i = 1; i < stamps.length; i++) {
      expect(stamps[i] - stamps[i - 1]).toBeGreaterThanOrEqual(100);
    }
  });

  it("cancel drops the pending trailing call", () => {
    const calls: number[] = [];
    const fn = rateLimited((v: number) => calls.push(v), 100);
    fn(1);
    fn(2);
    fn.cancel();
    vi.advanceTimersByTime(500);
    expect(calls).toEqual([1]);
  });
});
