#pragma once

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "mechgen/domain_io.hpp"
#include "mechgen/engine.hpp"
#include "mechgen/generator.hpp"
#include "mechgen/planner.hpp"
#include "mechgen/requirements.hpp"
#include "mechgen/validate.hpp"

namespace fixtures {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string path(const std::string& file) { return std::string(MECHGEN_DOMAINS_DIR) + "/" + file; }

inline mechgen::DomainSpec domain(const std::string& name) {
    return mechgen::parse_domain(read_file(path(name + ".domain.json")));
}

inline mechgen::MechanicSet mechanics(const std::string& name) {
    return mechgen::parse_mechanics(read_file(path(name + ".mechanics.json")));
}

}  // namespace fixtures
