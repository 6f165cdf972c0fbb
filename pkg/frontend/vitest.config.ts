import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // The round-trip suite boots the workflow service in a subprocess and
    // drives a full encounter through it, which needs generous headroom.
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
