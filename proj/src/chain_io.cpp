// Apache License, Version 2.0, refer to LICENSE.txt

#include <json.hpp>

#include "dlsjm/errors.hpp"
#include "dlsjm/io_util.hpp"
#include "dlsjm/sampler.hpp"

namespace dlsjm {

namespace {

constexpr char kChainMagic[8] = {'D', 'L', 'S', 'J', 'M', 'C', 'H', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), 8);
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void write_doubles(std::ofstream& out, const double* ptr, std::size_t count) {
  out.write(reinterpret_cast<const char*>(ptr), static_cast<std::streamsize>(count * 8));
}

void read_doubles(std::ifstream& in, double* ptr, std::size_t count) {
  in.read(reinterpret_cast<char*>(ptr), static_cast<std::streamsize>(count * 8));
}

nlohmann::json sampler_json(const SamplerConfig& c) {
  return {{"n_iterations", c.n_iterations},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"jump_beta", c.jump_beta},
          {"jump_theta", c.jump_theta},
          {"jump_z_buckets", c.jump_z_buckets},
          {"target_accept_lo", c.target_accept_lo},
          {"target_accept_hi", c.target_accept_hi},
          {"adapt_window", c.adapt_window},
          {"adapt_grow", c.adapt_grow},
          {"adapt_shrink", c.adapt_shrink},
          {"latent_dim", c.latent_dim},
          {"workers", c.workers},
          {"seed", c.seed}};
}

SamplerConfig sampler_from_json(const nlohmann::json& j) {
  SamplerConfig c;
  c.n_iterations = j.at("n_iterations").get<long>();
  c.burn_in = j.at("burn_in").get<long>();
  c.thin = j.at("thin").get<int>();
  c.jump_beta = j.at("jump_beta").get<double>();
  c.jump_theta = j.at("jump_theta").get<double>();
  c.jump_z_buckets = j.at("jump_z_buckets").get<std::vector<double>>();
  c.target_accept_lo = j.at("target_accept_lo").get<double>();
  c.target_accept_hi = j.at("target_accept_hi").get<double>();
  c.adapt_window = j.at("adapt_window").get<int>();
  c.adapt_grow = j.at("adapt_grow").get<double>();
  c.adapt_shrink = j.at("adapt_shrink").get<double>();
  c.latent_dim = j.at("latent_dim").get<int>();
  c.workers = j.at("workers").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

nlohmann::json prior_json(const PriorConfig& p) {
  return {{"sigma_beta_sq", p.sigma_beta_sq},
          {"sigma_theta_sq", p.sigma_theta_sq},
          {"a_sigma", p.a_sigma},
          {"b_sigma", p.b_sigma}};
}

PriorConfig prior_from_json(const nlohmann::json& j) {
  PriorConfig p;
  p.sigma_beta_sq = j.at("sigma_beta_sq").get<double>();
  p.sigma_theta_sq = j.at("sigma_theta_sq").get<double>();
  p.a_sigma = j.at("a_sigma").get<double>();
  p.b_sigma = j.at("b_sigma").get<double>();
  return p;
}

}  // namespace

void ChainOutput::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);

  {
    std::ofstream out = open_out(dir / "samples.bin");
    out.write(kChainMagic, 8);
    const std::uint32_t version = 1, reserved = 0;
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&reserved), 4);
    write_u64(out, n);
    write_u64(out, p);
    write_u64(out, D);
    write_u64(out, static_cast<std::uint64_t>(n_samples()));
    for (long it : sample_iteration) write_u64(out, static_cast<std::uint64_t>(it));
    for (int s = 0; s < n_samples(); ++s) {
      write_doubles(out, beta_samples[s].data(), p);
      write_doubles(out, theta_samples[s].data(), n);
      write_doubles(out, &sigma_samples[s], 1);
      write_doubles(out, z_samples[s].data(), static_cast<std::size_t>(n) * D);
    }
  }

  {
    std::ofstream out = open_out(dir / "log_posterior.csv");
    out << "sample,iteration,log_posterior\n";
    for (int s = 0; s < n_samples(); ++s)
      out << s << "," << sample_iteration[s] << "," << fmt_g17(log_posterior[s]) << "\n";
  }

  {
    std::ofstream out = open_out(dir / "acceptance.csv");
    out << "window_end,block,proposals,accepts,rate,jump_sd,phase\n";
    for (const auto& w : ledger.history)
      out << w.window_end << "," << w.block << "," << w.proposals << "," << w.accepts << ","
          << fmt_g17(w.rate) << "," << fmt_g17(w.jump_sd) << ","
          << (w.burnin ? "burnin" : "sampling") << "\n";
  }

  {
    nlohmann::json j;
    j["n"] = n;
    j["p"] = p;
    j["latent_dim"] = D;
    j["sampler"] = sampler_json(config);
    j["prior"] = prior_json(prior);
    j["pair_convention"] = "unordered";
    j["final_jumps"] = {{"beta_sd", final_jumps.beta_sd},
                        {"theta_sd", final_jumps.theta_sd},
                        {"z_sd", final_jumps.z_sd}};
    nlohmann::json rates;
    for (std::size_t b = 0; b < ledger.z_buckets.size(); ++b)
      rates["z_bucket" + std::to_string(b)] = ledger.z_buckets[b].rate();
    rates["beta"] = ledger.beta.rate();
    rates["theta"] = ledger.theta.rate();
    j["cumulative_acceptance"] = rates;
    std::ofstream out = open_out(dir / "config.json");
    out << j.dump(2) << "\n";
  }
}

ChainOutput ChainOutput::load(const std::filesystem::path& dir) {
  ChainOutput out;

  {
    std::ifstream in = open_in(dir / "samples.bin");
    char magic[8];
    in.read(magic, 8);
    if (!in || !std::equal(magic, magic + 8, kChainMagic))
      throw ValidationError((dir / "samples.bin").string() + ": bad magic");
    std::uint32_t version = 0, reserved = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&reserved), 4);
    if (version != 1) throw ValidationError("unsupported samples.bin version");
    out.n = static_cast<int>(read_u64(in));
    out.p = static_cast<int>(read_u64(in));
    out.D = static_cast<int>(read_u64(in));
    const auto S = static_cast<int>(read_u64(in));
    out.sample_iteration.resize(S);
    for (int s = 0; s < S; ++s) out.sample_iteration[s] = static_cast<long>(read_u64(in));
    out.beta_samples.resize(S);
    out.theta_samples.resize(S);
    out.sigma_samples.resize(S);
    out.z_samples.resize(S);
    for (int s = 0; s < S; ++s) {
      out.beta_samples[s].resize(out.p);
      out.theta_samples[s].resize(out.n);
      out.z_samples[s].resize(out.n, out.D);
      read_doubles(in, out.beta_samples[s].data(), out.p);
      read_doubles(in, out.theta_samples[s].data(), out.n);
      read_doubles(in, &out.sigma_samples[s], 1);
      read_doubles(in, out.z_samples[s].data(), static_cast<std::size_t>(out.n) * out.D);
    }
    if (!in) throw ValidationError("samples.bin truncated");
  }

  {
    std::ifstream in = open_in(dir / "log_posterior.csv");
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
      if (c1 == std::string::npos || c2 == std::string::npos) continue;
      out.log_posterior.push_back(std::stod(line.substr(c2 + 1)));
    }
  }

  {
    const auto j = nlohmann::json::parse(read_file(dir / "config.json"));
    out.config = sampler_from_json(j.at("sampler"));
    out.prior = prior_from_json(j.at("prior"));
    out.final_jumps.beta_sd = j.at("final_jumps").at("beta_sd").get<double>();
    out.final_jumps.theta_sd = j.at("final_jumps").at("theta_sd").get<double>();
    out.final_jumps.z_sd = j.at("final_jumps").at("z_sd").get<std::vector<double>>();
  }
  return out;
}

}  // namespace dlsjm
