/**
 * Rate-limited trailing debounce: the wrapped function runs at most once per
 * `minIntervalMs` and always eventually runs with the latest arguments.
 * Used to keep slider scrubbing at or below 10 requests per second.
 */
export function rateLimited(fn, minIntervalMs) {
    let lastRun = -Infinity;
    let timer = null;
    let pending = null;
    const runNow = (args) => {
        lastRun = Date.now();
        pending = null;
        fn(...args);
    };
    const wrapped = ((...args) => {
        const wait = lastRun + minIntervalMs - Date.now();
        if (wait <= 0 && timer === null) {
            runNow(args);
            return;
        }
        pending = args;
        if (timer === null) {
            timer = setTimeout(() => {
                timer = null;
                if (pending !== null)
                    runNow(pending);
            }, Math.max(wait, 0));
        }
    });
    wrapped.cancel = () => {
        if (timer !== null) {
            clearTimeout(timer);
            timer = null;
        }
        pending = null;
    };
    return wrapped;
}
