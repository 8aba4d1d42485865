/**
 * Global setup: boot the real session service for the wizard tests.
 *
 * The wizard is tested against the actual HTTP API (spawned from the
 * Python package in this repository), not against canned responses, so
 * any contract drift fails loudly here.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import type { TestProject } from "vitest/node";

let service: ChildProcess | undefined;

async function waitForService(baseUrl: string, timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${baseUrl}/kb/trees`);
      if (response.ok) return;
    } catch (error) {
      lastError = error;
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`session service did not come up at ${baseUrl}: ${lastError}`);
}

export default async function setup(project: TestProject): Promise<() => void> {
  const port = 8100 + Math.floor(Math.random() * 800);
  const baseUrl = `http://127.0.0.1:${port}`;
  const stateDir = mkdtempSync(join(tmpdir(), "itriage-ui-"));

  service = spawn(
    "python3",
    ["-m", "itriage.cli", "serve", "--persistence", stateDir, "--port", String(port)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  service.stderr?.on("data", () => {});
  service.stdout?.on("data", () => {});

  await waitForService(baseUrl);
  project.provide("baseUrl", baseUrl);

  return () => {
    service?.kill("SIGTERM");
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    baseUrl: string;
  }
}
