#pragma once

#include <sstream>

#include "bularag/commands.hpp"
#include "bularag/config.hpp"
#include "test_support.hpp"

namespace testsupport {

// Shipped config with its outputs redirected into `dir`, corpus ingested
// and indexed.
inline bularag::AppConfig build_pipeline(const TempDir& dir) {
    auto cfg = bularag::load_config(source_dir() / "config/default.json");
    cfg.manifest_path = dir / "passages.jsonl";
    cfg.bundle_path = dir / "index.bragidx";
    std::ostringstream sink;
    bularag::cmd_ingest(cfg.corpus_dir, cfg.manifest_path, cfg.ingest, sink);
    bularag::cmd_index(cfg.manifest_path, cfg.bundle_path, cfg.embedder, sink);
    return cfg;
}

}  // namespace testsupport
