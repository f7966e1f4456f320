/* tslint:disable */
/* eslint-disable */

/**
 * Names of the learners in the order `regret_curves` returns them.
 */
export function learner_names(): string[];

/**
 * Loss of a residual `r` under the square loss, its LEARN transform, Tukey
 * and Welsch. Rows of `[r, square, learn, tukey, welsch]` for `n` residuals
 * evenly spaced in `[-r_max, r_max]`.
 */
export function loss_profiles(a: number, b: number, c: number, r_max: number, n: number): Float64Array;

/**
 * Clean dynamic regret of every learner on one seeded stream, sampled at
 * `points` rounds. Layout: `points` round indices, then `points` values per
 * learner in `learner_names()` order.
 */
export function regret_curves(preset: string, horizon: number, k: number, a: number, b: number, seed: bigint, points: number): Float64Array;

/**
 * SVM stream and learned boundaries. Layout: `theta_star` (2), the final
 * action of each learner in `learner_names()` order (2 each), the point
 * count `m`, then `m` rows of `[x1, x2, y_emitted, is_outlier]`.
 */
export function svm_boundaries(horizon: number, k: number, a: number, b: number, seed: bigint, max_points: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly learner_names: () => [number, number];
    readonly loss_profiles: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly regret_curves: (a: number, b: number, c: number, d: number, e: number, f: number, g: bigint, h: number) => [number, number, number, number];
    readonly svm_boundaries: (a: number, b: number, c: number, d: number, e: bigint, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
