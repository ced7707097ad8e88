/* tslint:disable */
/* eslint-disable */

/**
 * Target positions, visiting order and difficulty of one reference ring.
 */
export function ringLayout(ring_id: number): string;

/**
 * Runs one simulated trial and returns its 40 Hz trace.
 */
export function simulateTrial(ring_id: number, gamma: number, operator: string, seed: number): string;

/**
 * Simulates every ring and gamma, fits both models and returns predicted
 * MT against gamma for each ring. `gammas` is a comma list; empty keeps the
 * default levels.
 */
export function sweepFit(operator: string, gammas: string, repeats: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly ringLayout: (a: number) => [number, number, number, number];
    readonly simulateTrial: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly sweepFit: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
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
