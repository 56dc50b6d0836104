#include "ddro/io.hpp"

#include <fstream>
#include <sstream>

#include "ddro/error.hpp"
#include "ddro/format.hpp"

namespace ddro::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) {
    out.push_back(cur);
  }
  if (!line.empty() && line.back() == sep) {
    out.emplace_back();
  }
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) {
    s.pop_back();
  }
  std::size_t i = 0;
  while (i < s.size() && s[i] == ' ') {
    ++i;
  }
  return s.substr(i);
}

std::size_t parse_index(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    throw InvalidArgument("malformed index '" + s + "'");
  }
  if (pos != s.size() || s.front() == '-') {
    throw InvalidArgument("malformed index '" + s + "'");
  }
  return static_cast<std::size_t>(v);
}

void expect_header(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != header) {
    throw InvalidArgument("expected CSV header '" + header + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

json world_to_json(const FiniteWorld& world) {
  return json{{"n_prompts", world.n_prompts()},     {"n_responses", world.n_responses()},
              {"prompt_dist", world.prompt_dist()}, {"p_plus", world.p_plus().to_rows()},
              {"p_minus", world.p_minus().to_rows()}, {"t", world.t()}};
}

FiniteWorld world_from_json(const json& j) {
  try {
    const auto n_prompts = j.at("n_prompts").get<std::size_t>();
    const auto n_responses = j.at("n_responses").get<std::size_t>();
    Matrix plus = Matrix::from_rows(j.at("p_plus").get<std::vector<std::vector<double>>>());
    Matrix minus = Matrix::from_rows(j.at("p_minus").get<std::vector<std::vector<double>>>());
    if (plus.rows() != n_prompts || plus.cols() != n_responses) {
      throw InvalidArgument("shape mismatch: p_plus does not match n_prompts x n_responses");
    }
    return build_distribution_world(std::move(plus), std::move(minus), j.at("t").get<double>(),
                                    j.at("prompt_dist").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed world JSON: ") + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidArgument("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw Error("write failed: " + path.string());
  }
}

FiniteWorld read_world(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed world JSON: ") + e.what());
  }
  return world_from_json(j);
}

void write_world(const std::filesystem::path& path, const FiniteWorld& world) {
  write_text(path, world_to_json(world).dump(2) + "\n");
}

void write_dataset_csv(std::ostream& out, const UnpairedDataset& data) {
  out << "label,prompt,response\n";
  for (const Sample& s : data.plus) {
    out << "+," << s.prompt << ',' << s.response << '\n';
  }
  for (const Sample& s : data.minus) {
    out << "-," << s.prompt << ',' << s.response << '\n';
  }
}

UnpairedDataset read_dataset_csv(std::istream& in, std::size_t n_prompts,
                                 std::size_t n_responses) {
  expect_header(in, "label,prompt,response");
  UnpairedDataset data;
  data.n_prompts = n_prompts;
  data.n_responses = n_responses;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 3) {
      throw InvalidArgument("dataset row needs 3 fields: " + line);
    }
    const Sample s{parse_index(trim(fields[1])), parse_index(trim(fields[2]))};
    const std::string label = trim(fields[0]);
    if (label == "+") {
      data.plus.push_back(s);
    } else if (label == "-") {
      data.minus.push_back(s);
    } else {
      throw InvalidArgument("dataset label must be + or -: " + label);
    }
  }
  data.validate();
  return data;
}

void write_pairs_csv(std::ostream& out, const PairedDataset& data) {
  out << "prompt,winner,loser\n";
  for (const Triple& t : data.triples) {
    out << t.prompt << ',' << t.winner << ',' << t.loser << '\n';
  }
}

PairedDataset read_pairs_csv(std::istream& in, std::size_t n_prompts, std::size_t n_responses) {
  expect_header(in, "prompt,winner,loser");
  PairedDataset data;
  data.n_prompts = n_prompts;
  data.n_responses = n_responses;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto fields = split(line, ',');
    if (fields.size() != 3) {
      throw InvalidArgument("pair row needs 3 fields: " + line);
    }
    data.triples.push_back(
        {parse_index(trim(fields[0])), parse_index(trim(fields[1])), parse_index(trim(fields[2]))});
  }
  data.validate();
  return data;
}

json policy_to_json(const TabularPolicy& policy) {
  return json{{"logits", policy.logits().to_rows()}};
}

TabularPolicy policy_from_json(const json& j) {
  try {
    return TabularPolicy(
        Matrix::from_rows(j.at("logits").get<std::vector<std::vector<double>>>()));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed policy JSON: ") + e.what());
  }
}

void write_ratio_csv(std::ostream& out, const RatioField& field) {
  out << "prompt,response,value,masked\n";
  for (std::size_t x = 0; x < field.values.rows(); ++x) {
    for (std::size_t y = 0; y < field.values.cols(); ++y) {
      // masked column mirrors domain_mask: 1 inside the support
      out << x << ',' << y << ',' << fmt_double(field.values(x, y)) << ','
          << (field.defined(x, y) ? 1 : 0) << '\n';
    }
  }
}

json loss_spec_to_json(const LossSpec& spec) {
  return json{{"generator", std::string(spec.generator.name())},
              {"form", std::string(loss_form_name(spec.form))},
              {"t", spec.t},
              {"gamma", spec.gamma},
              {"smoothing", std::string(spec.smoothing.name())},
              {"kl_in_gradient", spec.kl_in_gradient},
              {"clamp_epsilon", spec.clamp_epsilon}};
}

LossSpec loss_spec_from_json(const json& j, LossSpec base) {
  try {
    if (j.contains("generator")) {
      base.generator = ConvexGenerator(parse_generator(j.at("generator").get<std::string>()));
    }
    if (j.contains("form")) {
      base.form = parse_loss_form(j.at("form").get<std::string>());
    }
    if (j.contains("smoothing")) {
      base.smoothing.kind = parse_smoothing(j.at("smoothing").get<std::string>());
    }
    base.t = get_or(j, "t", base.t);
    base.gamma = get_or(j, "gamma", base.gamma);
    base.kl_in_gradient = get_or(j, "kl_in_gradient", base.kl_in_gradient);
    base.clamp_epsilon = get_or(j, "clamp_epsilon", base.clamp_epsilon);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed loss spec: ") + e.what());
  }
  base.validate();
  return base;
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"learning_rate", c.learning_rate},
              {"steps", c.steps},
              {"optimizer", std::string(optimizer_name(c.optimizer))},
              {"minibatch_size", c.minibatch_size},
              {"seed", c.seed},
              {"telemetry_every", c.telemetry_every},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"adam_epsilon", c.adam_epsilon},
              {"weight_decay", c.weight_decay},
              {"low_rank", c.low_rank}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  try {
    if (j.contains("optimizer")) {
      c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    }
    c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
    c.steps = get_or(j, "steps", c.steps);
    c.minibatch_size = get_or(j, "minibatch_size", c.minibatch_size);
    c.seed = get_or(j, "seed", c.seed);
    c.telemetry_every = get_or(j, "telemetry_every", c.telemetry_every);
    c.beta1 = get_or(j, "beta1", c.beta1);
    c.beta2 = get_or(j, "beta2", c.beta2);
    c.adam_epsilon = get_or(j, "adam_epsilon", c.adam_epsilon);
    c.weight_decay = get_or(j, "weight_decay", c.weight_decay);
    c.low_rank = get_or(j, "low_rank", c.low_rank);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed train config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace ddro::io
