import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the live parity suite spawns a real server and drives hundreds of
    // round trips; give it room
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
