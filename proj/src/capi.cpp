#include "viraltl.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>

#include <json.hpp>

#include "config.hpp"
#include "errors.hpp"

using nlohmann::json;

struct vtl_model {
  json node;
  bool two_cp = false;
};

namespace {

thread_local std::string g_last_kind;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_error(char** error, const std::string& message) {
  if (error) *error = dup_string(message);
}

vtl_status handle_failure(char** error) {
  try {
    throw;
  } catch (const vtl::VtlError& e) {
    g_last_kind = e.kind();
    set_error(error, e.what());
    switch (e.code()) {
      case vtl::ErrorCode::Config: return VTL_CONFIG_ERROR;
      case vtl::ErrorCode::Regime: return VTL_REGIME_ERROR;
      default: return VTL_INTERNAL_ERROR;
    }
  } catch (const std::exception& e) {
    g_last_kind = "internal";
    set_error(error, e.what());
    return VTL_INTERNAL_ERROR;
  } catch (...) {
    g_last_kind = "internal";
    set_error(error, "unknown failure");
    return VTL_INTERNAL_ERROR;
  }
}

}  // namespace

extern "C" {

const char* vtl_version(void) { return vtl::kVersion; }

void vtl_string_free(char* text) { std::free(text); }

vtl_model* vtl_model_create(const char* model_json, char** error) {
  g_last_kind.clear();
  if (error) *error = nullptr;
  try {
    if (!model_json) throw vtl::config_error("bad-config", "model JSON is null");
    json node;
    try {
      node = json::parse(model_json);
    } catch (const json::parse_error& e) {
      throw vtl::config_error("malformed-json", e.what());
    }
    const bool two_cp = vtl::model_is_two_cp(node);
    if (two_cp) vtl::parse_two_cp_model(node, "model");
    else vtl::parse_single_model(node, "model");
    return new vtl_model{std::move(node), two_cp};
  } catch (...) {
    handle_failure(error);
    return nullptr;
  }
}

void vtl_model_free(vtl_model* model) { delete model; }

int vtl_model_is_two_cp(const vtl_model* model) {
  return model && model->two_cp ? 1 : 0;
}

vtl_status vtl_model_run(const vtl_model* model, const char* command,
                         const char* options_json, uint64_t seed, const char* convention,
                         char** report_json, char** error) {
  g_last_kind.clear();
  if (report_json) *report_json = nullptr;
  if (error) *error = nullptr;
  try {
    if (!model) throw vtl::config_error("bad-config", "model handle is null");
    if (!command) throw vtl::config_error("bad-config", "command is null");
    json config;
    config["model"] = model->node;
    config["command"] = command;
    config["seed"] = seed;
    if (convention) config["convention"] = convention;
    if (options_json) {
      try {
        config["options"] = json::parse(options_json);
      } catch (const json::parse_error& e) {
        throw vtl::config_error("malformed-json", e.what());
      }
    }
    const vtl::CommandOutput out = vtl::run_config(config);
    if (report_json) *report_json = dup_string(out.report.dump(2));
    return VTL_OK;
  } catch (...) {
    return handle_failure(error);
  }
}

vtl_status vtl_run_config(const char* config_json, char** report_json, char** error) {
  g_last_kind.clear();
  if (report_json) *report_json = nullptr;
  if (error) *error = nullptr;
  try {
    if (!config_json) throw vtl::config_error("bad-config", "config JSON is null");
    const vtl::CommandOutput out = vtl::run_config_text(config_json);
    if (report_json) *report_json = dup_string(out.report.dump(2));
    return VTL_OK;
  } catch (...) {
    return handle_failure(error);
  }
}

const char* vtl_last_error_kind(void) { return g_last_kind.c_str(); }

}  // extern "C"
