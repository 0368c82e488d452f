import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the smoke test boots the python service and renders previews
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
