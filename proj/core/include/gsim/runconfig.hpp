#pragma once

// Plain-text run configuration: `key = value` lines with `#` comments, a
// fixed key vocabulary with defaults, and command-line overrides layered on
// top.  Every consumer of a knob reads it from here so the CLI can echo the
// complete effective configuration at startup.

#include <cstdint>
#include <map>
#include <string>

#include "gsim/dataio.hpp"
#include "gsim/featnet.hpp"
#include "gsim/trainer.hpp"

namespace gsim {

class RunConfig {
  public:
    // Every known key with its default value.
    static RunConfig defaults();

    // defaults() overlaid with the file's assignments.  Unknown keys and
    // syntax problems are reported with their line number.
    static RunConfig from_file(const std::string& path);

    // Overlay one key (must be known).  The expr form takes "key=value".
    void set(const std::string& key, const std::string& value);
    void set_expr(const std::string& key_eq_value);

    const std::map<std::string, std::string>& values() const { return values_; }

    std::string get_string(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    int get_int(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::uint64_t get_seed(const std::string& key) const;

    // Typed views over the key groups (each validates its result).
    SynthSpec synth_spec() const;        // data.*
    TrainConfig train_config() const;    // train.* and batch.*
    NetShape net_shape(int input_dim_x, int input_dim_y) const;  // net.*

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace gsim
