/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_wasmdemo_free: (a: number, b: number) => void;
export const wasmdemo_judge: (a: number, b: number, c: number, d: number) => [number, number];
export const wasmdemo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const wasmdemo_points: (a: number) => [number, number, number, number];
export const wasmdemo_profile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const wasmdemo_rank: (a: number) => [number, number, number, number];
export const wasmdemo_reset: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
