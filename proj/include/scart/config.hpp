#pragma once

#include <filesystem>
#include <string>

#include "scart/flight_sim.hpp"
#include "scart/matrix.hpp"
#include "scart/scenario.hpp"

// Text codecs for the YAML files the CLI consumes. Grammar: docs/file_formats.md.
// Every parse function throws ParseError carrying the 1-based line number.
namespace scart::config {

Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>");
std::string dump_scenario(const Scenario& scenario);

MissionPlan parse_mission(const std::string& text, const std::string& source = "<mission>");
std::string dump_mission(const MissionPlan& plan);

// Keys present in text override the corresponding fields of base.
SimConfig parse_sim_config(const std::string& text, SimConfig base = {}, const std::string& source = "<config>");
std::string dump_sim_config(const SimConfig& cfg);

MatrixDefaults parse_matrix_defaults(const std::string& text, const std::string& source = "<defaults>");
std::string dump_matrix_defaults(const MatrixDefaults& defaults);

// Scenario file of one matrix entry, with its masks recorded under `matrix:`.
std::string dump_attack_spec(const AttackSpec& spec, const MatrixDefaults& defaults);

std::string read_text(const std::filesystem::path& path);  // throws IoFailure

}  // namespace scart::config
