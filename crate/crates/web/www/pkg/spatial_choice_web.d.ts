/* tslint:disable */
/* eslint-disable */

/**
 * A graph that grows in chunks so the page can animate it.
 */
export class Model {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Runs `steps` more steps; returns `{"n", "edges", "top"}` as JSON.
     */
    advance(steps: number): string;
    /**
     * The `count` highest-degree vertices as `[{position, degree}]`,
     * for drawing on the circle.
     */
    leaders(count: number): string;
    n(): bigint;
    constructor(a: number, b: number, alpha: number, beta: number, d: number, m_dist: string, n0: number, seed: bigint, track_k: number);
}

/**
 * Solves the fixed-point system; returns JSON with `regime`, `x_star`,
 * `K`, the critical constant and sampled `f_k` curves.
 */
export function theory(a: number, alpha: number, d: number, m_dist: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_model_free: (a: number, b: number) => void;
    readonly model_advance: (a: number, b: number) => [number, number];
    readonly model_leaders: (a: number, b: number) => [number, number];
    readonly model_n: (a: number) => bigint;
    readonly model_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: bigint, j: number) => [number, number, number];
    readonly theory: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
