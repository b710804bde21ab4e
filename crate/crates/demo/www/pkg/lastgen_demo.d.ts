/* tslint:disable */
/* eslint-disable */

/**
 * Flattened `(delta_o, bound, ideal)` triples for `points` values of
 * delta_o spread evenly over `[0, max_delta_o]`.
 */
export function bound_curves(delta_b: number, mean_interval: number, max_delta_o: number, points: number): Float64Array;

/**
 * Classifies `delta = arrival_local - timestamp` as "early", "honest" or "late".
 */
export function classify(delta: number, delta_o: number, delta_b: number): string;

/**
 * Runs one cell against a 50% attacker stamping `delta_o + 2 delta_b` ahead.
 * Returns `[gamma_mean, gamma_stderr, bound, ideal, n_ties, honest_blocks, attacker_blocks]`;
 * the stderr slot is NaN with fewer than two ties.
 */
export function simulate(rule: string, n_honest: number, delta_o: number, delta_b: number, offset_std: number, propagation_delay: number, ties: number, seed: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly bound_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly classify: (a: number, b: number, c: number) => [number, number, number, number];
    readonly simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
