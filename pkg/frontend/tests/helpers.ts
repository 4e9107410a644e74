// Shared test plumbing: fixture loading (recorded once from the real
// service on the mock backend) and a recording stub fetch.

import { readFileSync } from "node:fs";

import type { FetchLike } from "../src/api.js";

export function loadFixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

export type RouteHandler = (
  method: string,
  path: string,
  body: unknown,
) => unknown | Promise<unknown>;

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function makeStubFetch(handler: RouteHandler): {
  fetchFn: FetchLike;
  requests: RecordedRequest[];
} {
  const requests: RecordedRequest[] = [];
  const fetchFn: FetchLike = async (input, init) => {
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? JSON.parse(init.body) : null;
    requests.push({ method, path: input, body });
    const outcome = await handler(method, input, body);
    if (outcome instanceof Response) return outcome;
    return jsonResponse(outcome);
  };
  return { fetchFn, requests };
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  const promise = new Promise<T>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}
