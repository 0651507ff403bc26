#pragma once

// Shared between the fixture generator and the test suites: the exact project
// configuration the bundled fixtures were recorded with. Request digests cover
// model/temperature/seed and every message byte, so generator and consumers
// must agree on all of it.

#include <string>

namespace ceker_fixtures {

inline const char* kTopic = "unikernel security";
inline const char* kModel = "fixture-model";

// fixtures_dir must be absolute; the project may live anywhere.
inline std::string fixture_config_toml(const std::string& fixtures_dir,
                                       const std::string& backend) {
    std::string toml;
    toml += "topic = \"" + std::string(kTopic) + "\"\n";
    toml += "\n[gateway]\n";
    toml += "backend = \"" + backend + "\"\n";
    toml += "model = \"" + std::string(kModel) + "\"\n";
    toml += "temperature = 0.0\n";
    toml += "seed = 0\n";
    toml += "mock_rules = \"" + fixtures_dir + "/mock_rules.json\"\n";
    toml += "transcripts = \"" + fixtures_dir + "/transcripts\"\n";
    toml += "\n[verification]\n";
    toml += "threshold = 0.90\n";
    toml += "ambiguity_gap = 0.02\n";
    toml += "resolvers = [\"fixture:" + fixtures_dir + "/resolver_works.json\"]\n";
    toml += "\n[extraction]\n";
    toml += "terms = [\"ASLR\", \"DEP\", \"Stack Canaries\"]\n";
    toml += "parallelism = 4\n";
    toml += "\n[analysis]\n";
    toml += "baseline = \"" + fixtures_dir + "/baseline.csv\"\n";
    toml += "\n[vocab]\n";
    toml += "unikernels = \"" + fixtures_dir + "/vocab/unikernels.json\"\n";
    toml += "security_features = \"" + fixtures_dir + "/vocab/security_features.json\"\n";
    return toml;
}

} // namespace ceker_fixtures
