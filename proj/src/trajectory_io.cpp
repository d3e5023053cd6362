#include "ergodyn/trajectory_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ergodyn/errors.hpp"
#include "ergodyn/format.hpp"

namespace ergodyn {

static_assert(std::endian::native == std::endian::little, "trajectory files assume a little-endian host");

namespace {

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw InvalidInput("truncated trajectory header");
  return v;
}

}  // namespace

nlohmann::json trajectory_metadata(const Trajectory& traj) {
  nlohmann::json j;
  j["format"] = kTrajectoryMagic;
  j["seed"] = traj.seed;
  j["objective"] = traj.objective;
  j["stride"] = traj.stride;
  j["sampling"] = to_string(traj.sampling);
  j["batch_size"] = traj.batch_size;
  j["steps_per_epoch"] = traj.steps_per_epoch;
  j["weight_decay"] = traj.weight_decay;
  j["num_steps"] = traj.num_steps();
  j["diverged"] = traj.diverged;
  j["divergence_reason"] = traj.divergence_reason;
  j["iterate_steps"] = traj.iterate_steps;
  auto& shapes = j["layout"] = nlohmann::json::array();
  if (!traj.iterates.empty()) {
    for (const auto& s : traj.iterates.front().shapes()) shapes.push_back({s.rows, s.cols});
  }
  return j;
}

void write_records_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << "step,eta,batch_loss,batch\n";
  for (const auto& r : traj.records) {
    out << r.step << ',' << fmt_double(r.eta) << ',' << fmt_double(r.batch_loss) << ',';
    for (std::size_t i = 0; i < r.batch.size(); ++i) out << (i ? ";" : "") << r.batch[i];
    out << '\n';
  }
}

void write_trajectory(const Trajectory& traj, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "trajectory.bin", std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + (dir / "trajectory.bin").string());
    out.write(kTrajectoryMagic, 8);
    const std::uint64_t dim = traj.iterates.empty() ? 0 : traj.iterates.front().size();
    write_u64(out, traj.iterates.size());
    write_u64(out, dim);
    for (const auto& it : traj.iterates) {
      out.write(reinterpret_cast<const char*>(it.values().data()),
                static_cast<std::streamsize>(it.size() * sizeof(double)));
    }
  }
  {
    std::ofstream out(dir / "trajectory.json", std::ios::binary);
    out << trajectory_metadata(traj).dump(2) << '\n';
  }
  write_records_csv(traj, dir / "records.csv");
}

Trajectory read_trajectory(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "trajectory.json");
  if (!meta_in) throw InvalidInput("missing " + (dir / "trajectory.json").string());
  const auto meta = nlohmann::json::parse(meta_in);

  Trajectory t;
  t.seed = meta.at("seed").get<std::uint64_t>();
  t.objective = meta.at("objective").get<std::string>();
  t.stride = meta.at("stride").get<std::size_t>();
  t.sampling = parse_sampling(meta.at("sampling").get<std::string>());
  t.batch_size = meta.at("batch_size").get<std::size_t>();
  t.steps_per_epoch = meta.at("steps_per_epoch").get<std::size_t>();
  t.weight_decay = meta.at("weight_decay").get<double>();
  t.diverged = meta.at("diverged").get<bool>();
  t.divergence_reason = meta.at("divergence_reason").get<std::string>();
  t.iterate_steps = meta.at("iterate_steps").get<std::vector<std::size_t>>();
  std::vector<BlockShape> shapes;
  for (const auto& s : meta.at("layout")) shapes.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});

  std::ifstream in(dir / "trajectory.bin", std::ios::binary);
  if (!in) throw InvalidInput("missing " + (dir / "trajectory.bin").string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kTrajectoryMagic, 8) != 0) throw InvalidInput("trajectory.bin: bad magic header");
  const std::uint64_t count = read_u64(in);
  const std::uint64_t dim = read_u64(in);
  if (count != t.iterate_steps.size()) throw InvalidInput("trajectory.bin iterate count disagrees with metadata");
  for (std::uint64_t k = 0; k < count; ++k) {
    std::vector<double> v(dim);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim * sizeof(double)));
    if (!in) throw InvalidInput("trajectory.bin is truncated");
    t.iterates.emplace_back(std::move(v), shapes);
  }

  std::ifstream rec(dir / "records.csv");
  if (!rec) throw InvalidInput("missing " + (dir / "records.csv").string());
  std::string line;
  std::getline(rec, line);
  while (std::getline(rec, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string step, eta, loss, batch;
    std::getline(ss, step, ',');
    std::getline(ss, eta, ',');
    std::getline(ss, loss, ',');
    std::getline(ss, batch);
    StepRecord r;
    r.step = std::stoull(step);
    r.eta = std::stod(eta);
    r.batch_loss = std::stod(loss);
    std::istringstream bs(batch);
    std::string idx;
    while (std::getline(bs, idx, ';')) r.batch.push_back(std::stoull(idx));
    t.records.push_back(std::move(r));
  }
  return t;
}

}  // namespace ergodyn
