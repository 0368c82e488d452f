import { defineConfig } from "vite";

// the dev server proxies /api to a locally running `trackvid serve`
export default defineConfig({
  server: {
    proxy: {
      "/api": `http://127.0.0.1:${process.env.TRACKVID_PORT ?? "8350"}`,
    },
  },
  build: {
    target: "es2022",
  },
});
