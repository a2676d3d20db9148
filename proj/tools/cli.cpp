#include "cli.hpp"

#include <CLI11.hpp>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>

#include "nnrw/channel_scorer.hpp"
#include "nnrw/protocol.hpp"

namespace nnrw::cli {
namespace {

using nlohmann::ordered_json;

struct Options {
  std::string input;
  std::string output;
  std::vector<int> layers;
  std::vector<std::string> channels;
  int offset = kDefaultOffset;
  std::string digit_pos = "auto";
  std::string calib;
  std::string message;
  std::string report;
};

void add_io(CLI::App* cmd, Options& o, bool needs_output) {
  cmd->add_option("-i,--input", o.input, "Input .nnrw container")->required();
  auto* out = cmd->add_option("-o,--output", o.output, "Output .nnrw container");
  if (needs_output) out->required();
}

void add_layers(CLI::App* cmd, Options& o) {
  cmd->add_option("--layer", o.layers, "Layer index, negative counts from the end (repeatable)")
      ->allow_extra_args(false);
}

void add_embed_flags(CLI::App* cmd, Options& o) {
  add_layers(cmd, o);
  cmd->add_option("--channels", o.channels, "Channels N per --layer, or 'auto' (repeatable)")->allow_extra_args(false);
  cmd->add_option("--offset", o.offset, "Symbol offset V")->capture_default_str();
  cmd->add_option("--digit-pos", o.digit_pos, "Digit pair position c in [2,5], or 'auto'")->capture_default_str();
  cmd->add_option("--calib", o.calib, "Calibration .nnrw with input_* tensors");
}

EmbedConfig embed_config(const Options& o) {
  EmbedConfig config;
  config.offset = o.offset;
  if (o.digit_pos != "auto") {
    try {
      config.digit_position = std::stoi(o.digit_pos);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "--digit-pos expects an integer or 'auto'");
    }
  }
  if (!o.calib.empty()) config.calibration = std::make_shared<ModelContainer>(load_container(o.calib));
  std::vector<int> layers = o.layers;
  if (layers.empty()) layers.push_back(-1);
  if (o.channels.size() > layers.size()) throw Error(ErrorCode::InvalidConfig, "more --channels than --layer values");
  config.layers.clear();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerConfig layer;
    layer.layer = layers[i];
    if (i < o.channels.size() && o.channels[i] != "auto") {
      try {
        layer.channels = std::stoul(o.channels[i]);
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidConfig, "--channels expects an integer or 'auto'");
      }
    }
    config.layers.push_back(layer);
  }
  return config;
}

BitString message_bits(const std::string& spec) {
  if (spec.starts_with("@")) return unpack_bits(read_file(spec.substr(1)));
  return unpack_bits(from_hex(spec));
}

void write_report(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  const std::string line = text + "\n";
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(line.data()), line.size()));
}

ordered_json layer_json(const LayerEmbedReport& r) {
  return {{"layer", r.layer_index},       {"channels", r.channels},
          {"digit_position", r.digit_position}, {"peak", r.hs.peak},
          {"valley", r.hs.valley},        {"capacity", r.hs.capacity},
          {"carriers", r.carriers},       {"excluded", r.excluded},
          {"plan_bits", r.plan_bits},     {"message_bits", r.message_bits},
          {"message_capacity", r.message_capacity}, {"modified_weights", r.modified_weights}};
}

void print_embed_csv(std::ostream& out, const std::vector<LayerEmbedReport>& layers) {
  out << "layer,channels,digit_position,peak,valley,capacity,carriers,excluded,plan_bits,message_bits,"
         "message_capacity,modified_weights\n";
  for (const auto& r : layers) {
    out << r.layer_index << ',' << r.channels << ',' << r.digit_position << ',' << r.hs.peak << ',' << r.hs.valley
        << ',' << r.hs.capacity << ',' << r.carriers << ',' << r.excluded << ',' << r.plan_bits << ','
        << r.message_bits << ',' << r.message_capacity << ',' << r.modified_weights << '\n';
  }
}

ordered_json embed_record(const EmbedResult& result) {
  ordered_json layers = ordered_json::array();
  for (const auto& r : result.layers) layers.push_back(layer_json(r));
  return {{"layers", layers}};
}

std::string fixed(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << std::fixed << v;
  return os.str();
}

int cmd_inspect(const Options& o, std::ostream& out) {
  const ModelContainer model = load_container(o.input);
  ordered_json tensors = ordered_json::array();
  for (const auto& t : model.tensors) tensors.push_back({{"name", t.name}, {"shape", t.shape}});
  ordered_json layers = ordered_json::array();
  const auto sealed = detect_sealed_layers(model);
  for (std::size_t i = 0; i < model.manifest.size(); ++i) {
    const auto& l = model.manifest[i];
    const bool marked = std::find(sealed.begin(), sealed.end(), static_cast<int>(i)) != sealed.end();
    layers.push_back({{"layer", l.layer_index},
                      {"tensor", l.weight_tensor},
                      {"stride", l.stride},
                      {"padding", l.padding},
                      {"marked", marked}});
  }
  ordered_json record = {{"version", model.version},
                         {"digest", to_hex(model_digest(model))},
                         {"tensors", tensors},
                         {"layers", layers}};
  out << record.dump() << '\n';
  return kExitOk;
}

int cmd_score(const Options& o, std::ostream& out) {
  if (o.calib.empty()) throw Error(ErrorCode::InvalidConfig, "score needs --calib");
  const ModelContainer model = load_container(o.input);
  const ModelContainer calib = load_container(o.calib);
  const int layer = o.layers.empty() ? -1 : o.layers.front();
  const LayerSpec& spec = model.layer(layer);
  const WeightTensor* t = model.find(spec.weight_tensor);
  const auto images = calibration_inputs(calib, spec.layer_index);
  if (images.empty()) throw Error(ErrorCode::InvalidConfig, "no calibration inputs for this layer");
  const ChannelRank rank = rank_channels(channel_scores(*t, spec.stride, spec.padding, images));
  std::vector<std::size_t> position(rank.order.size());
  for (std::size_t i = 0; i < rank.order.size(); ++i) position[rank.order[i]] = i;
  out << "channel,m,entropy_bits,rank\n";
  for (std::size_t ch = 0; ch < rank.entropies.size(); ++ch) {
    out << ch << ',' << rank.bin_counts[ch] << ',' << fixed(rank.entropies[ch]) << ',' << position[ch] << '\n';
  }
  return kExitOk;
}

int cmd_plan(const Options& o, std::ostream& out, std::ostream& err) {
  const ModelContainer model = load_container(o.input);
  const EmbedConfig config = embed_config(o);
  ordered_json record = ordered_json::array();
  out << "layer,c,entropy_bits,usable_count,selected,channels,peak,valley,capacity,plan_bits,message_capacity\n";
  for (const auto& layer : config.layers) {
    const LayerPlan chosen = plan_layer(model, layer, config);
    for (const auto& row : chosen.pair_entropies) {
      EmbedConfig fixed_c = config;
      fixed_c.digit_position = row.c;
      std::optional<LayerPlan> at_c;
      try {
        at_c = plan_layer(model, layer, fixed_c);
      } catch (const Error& e) {
        err << "layer " << chosen.layer_index << " c=" << row.c << ": " << e.what() << '\n';
      }
      out << chosen.layer_index << ',' << row.c << ',' << fixed(row.entropy_bits) << ',' << row.usable_count << ','
          << (row.c == chosen.plan.digit_position ? 1 : 0) << ',';
      if (at_c) {
        out << at_c->plan.channels << ',' << at_c->hs.peak << ',' << at_c->hs.valley << ',' << at_c->hs.capacity << ','
            << at_c->plan_bits << ',' << at_c->message_capacity() << '\n';
      } else {
        out << ",,,,,\n";
      }
    }
    record.push_back({{"layer", chosen.layer_index},
                      {"channels", chosen.plan.channels},
                      {"digit_position", chosen.plan.digit_position},
                      {"peak", chosen.hs.peak},
                      {"valley", chosen.hs.valley},
                      {"capacity", chosen.hs.capacity},
                      {"plan_bits", chosen.plan_bits},
                      {"message_capacity", chosen.message_capacity()},
                      {"channel_order", chosen.plan.order_prefix}});
  }
  write_report(o.report, record.dump());
  return kExitOk;
}

int cmd_embed(const Options& o, std::ostream& out) {
  if (o.message.empty()) throw Error(ErrorCode::InvalidConfig, "embed needs --message HEX or @FILE");
  const ModelContainer model = load_container(o.input);
  const BitString message = message_bits(o.message);
  const EmbedResult result = embed_watermark(model, message, embed_config(o));
  save_container(o.output, result.marked);
  print_embed_csv(out, result.layers);
  write_report(o.report, embed_record(result).dump());
  return kExitOk;
}

int cmd_extract(const Options& o, std::ostream& out) {
  const ModelContainer marked = load_container(o.input);
  const ExtractResult result = extract_watermark(marked, o.layers);
  if (!o.output.empty()) save_container(o.output, result.restored);
  out << to_hex(pack_bits(result.message)) << '\n';
  ordered_json layers = ordered_json::array();
  for (const auto& l : result.layers) {
    layers.push_back({{"layer", l.layer_index},
                      {"message_bits", l.message.size()},
                      {"channels", l.plan.channels},
                      {"digit_position", l.plan.digit_position},
                      {"peak", l.plan.peak},
                      {"valley", l.plan.valley}});
  }
  write_report(o.report, ordered_json{{"message_bits", result.message.size()},
                                      {"message", to_hex(pack_bits(result.message))},
                                      {"layers", layers}}
                             .dump());
  return kExitOk;
}

int cmd_seal(const Options& o, std::ostream& out) {
  const ModelContainer model = load_container(o.input);
  const EmbedResult result = seal(model, embed_config(o));
  save_container(o.output, result.marked);
  out << to_hex(model_digest(model)) << '\n';
  write_report(o.report, embed_record(result).dump());
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
  const VerifyReport report = verify_bytes(read_file(o.input), o.layers);
  out << to_string(report.verdict) << '\n';
  err << report.to_text();
  write_report(o.report, report.to_record());
  switch (report.verdict) {
    case Verdict::Intact:
      return kExitOk;
    case Verdict::Tampered:
      return kExitTampered;
    case Verdict::NotSealed:
      break;
  }
  return kExitError;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reversible fragile watermarking of convolution weights", "nnrw"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  Options o;

  auto* inspect = app.add_subcommand("inspect", "Describe a container");
  add_io(inspect, o, false);

  auto* score = app.add_subcommand("score", "Channel entropies and ranking from calibration inputs (CSV)");
  add_io(score, o, false);
  add_layers(score, o);
  score->add_option("--calib", o.calib, "Calibration .nnrw with input_* tensors")->required();

  auto* plan = app.add_subcommand("plan", "Digit-position candidates with entropies and capacity (CSV)");
  add_io(plan, o, false);
  add_embed_flags(plan, o);
  plan->add_option("--report", o.report, "Write a JSON report");

  auto* embed = app.add_subcommand("embed", "Embed a message");
  add_io(embed, o, true);
  add_embed_flags(embed, o);
  embed->add_option("--message", o.message, "Message as HEX or @FILE")->required();
  embed->add_option("--report", o.report, "Write a JSON report");

  auto* extract = app.add_subcommand("extract", "Extract the message and restore the model");
  add_io(extract, o, false);
  add_layers(extract, o);
  extract->add_option("--report", o.report, "Write a JSON report");

  auto* seal_cmd = app.add_subcommand("seal", "Embed the model's SHA-256 digest");
  add_io(seal_cmd, o, true);
  add_embed_flags(seal_cmd, o);
  seal_cmd->add_option("--report", o.report, "Write a JSON report");

  auto* verify_cmd = app.add_subcommand("verify", "Check a sealed model");
  add_io(verify_cmd, o, false);
  add_layers(verify_cmd, o);
  verify_cmd->add_option("--report", o.report, "Write the JSON verification record");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*inspect) return cmd_inspect(o, out);
    if (*score) return cmd_score(o, out);
    if (*plan) return cmd_plan(o, out, err);
    if (*embed) return cmd_embed(o, out);
    if (*extract) return cmd_extract(o, out);
    if (*seal_cmd) return cmd_seal(o, out);
    if (*verify_cmd) return cmd_verify(o, out, err);
  } catch (const Error& e) {
    err << "nnrw: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "nnrw: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace nnrw::cli
