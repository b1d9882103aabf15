// Command-line front end: reads a JSON run configuration, executes it through
// the shared-library C interface, and writes the report and CSV artifacts.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "viraltl.h"

namespace {

int fail(const std::string& message, int code) {
  std::cerr << "viraltl: " << message << "\n";
  return code;
}

bool write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"viral-timeline branching-process toolkit"};
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "json";
  std::string convention;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory for the report and CSV artifacts");
  app.add_option("--format", format, "primary stdout format")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", seed, "override the configured master seed");
  app.add_option("--convention", convention, "share-counting convention override")
      ->check(CLI::IsMember({"paper-k", "recipient"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) return fail("cannot read config file: " + config_path, 2);
  std::stringstream buffer;
  buffer << in.rdbuf();

  nlohmann::json config;
  try {
    config = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    return fail(std::string("malformed JSON config: ") + e.what(), 2);
  }
  if (!config.is_object()) return fail("config must be a JSON object", 2);
  if (app.count("--seed") > 0) config["seed"] = seed;
  if (app.count("--convention") > 0) config["convention"] = convention;

  char* report_text = nullptr;
  char* error_text = nullptr;
  const vtl_status status =
      vtl_run_config(config.dump().c_str(), &report_text, &error_text);
  if (status != VTL_OK) {
    const std::string message = error_text ? error_text : "unknown failure";
    vtl_string_free(error_text);
    vtl_string_free(report_text);
    return fail(message, static_cast<int>(status));
  }
  const std::string report = report_text;
  vtl_string_free(report_text);
  vtl_string_free(error_text);

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) return fail("cannot create output directory: " + out_dir, 2);
  const std::filesystem::path out_base(out_dir);
  if (!write_file(out_base / "report.json", report + "\n"))
    return fail("cannot write report.json", 2);

  const nlohmann::json parsed = nlohmann::json::parse(report);
  std::string first_artifact;
  for (const nlohmann::json& artifact : parsed.at("artifacts")) {
    const std::string name = artifact.at("name").get<std::string>();
    const std::string content = artifact.at("content").get<std::string>();
    if (first_artifact.empty()) first_artifact = content;
    if (!write_file(out_base / name, content)) return fail("cannot write " + name, 2);
  }

  if (format == "json") std::cout << report << "\n";
  else std::cout << first_artifact;
  return 0;
}
