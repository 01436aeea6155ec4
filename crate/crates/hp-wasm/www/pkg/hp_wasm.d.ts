/* tslint:disable */
/* eslint-disable */

/**
 * Asian call from `x = (1, 0)` at time 0 by density quadrature; a strike of
 * 0 or below selects the floating-strike call. `method` is `yor` or `parametrix`.
 */
export function asian_price(strike: number, sigma: number, maturity: number, method: string): string;

/**
 * Series coefficients `a_n, b_n` for `n = 2..order`, computed exactly.
 */
export function coefficients(order: number): string;

/**
 * Cost, invariant `h`, energy and unit-volatility kernel at `(t, x) -> (T, y)`.
 */
export function cost_and_kernel(t: number, x1: number, x2: number, big_t: number, y1: number, y2: number, sigma: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly asian_price: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly coefficients: (a: number) => [number, number, number, number];
    readonly cost_and_kernel: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
