import { defineConfig } from "vitest/config";

export default defineConfig({
  build: { outDir: "dist", target: "es2022" },
  test: {
    environment: "node",
    testTimeout: 120000,
    hookTimeout: 60000,
  },
});
