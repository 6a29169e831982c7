/* tslint:disable */
/* eslint-disable */

export class WasmDemo {
    free(): void;
    [Symbol.dispose](): void;
    judge(user_id: string, relevant: boolean): void;
    constructor(communities: number, users_per_community: number, mixing: number, seed: number);
    /**
     * `[{id, x, y, community, posts}]`
     */
    points(): string;
    /**
     * `[{id, kind, channel?, usage, score_rank}]`
     */
    profile(user_id: string, nn: number): string;
    /**
     * `{round, top, scores}`
     */
    rank(): string;
    reset(): void;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_wasmdemo_free: (a: number, b: number) => void;
    readonly wasmdemo_judge: (a: number, b: number, c: number, d: number) => [number, number];
    readonly wasmdemo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly wasmdemo_points: (a: number) => [number, number, number, number];
    readonly wasmdemo_profile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly wasmdemo_rank: (a: number) => [number, number, number, number];
    readonly wasmdemo_reset: (a: number) => [number, number];
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
