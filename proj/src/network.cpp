#include "ctmf/network.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "csv_util.hpp"

namespace ctmf {

const char* to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::mainline: return "mainline";
    case LinkKind::onramp: return "onramp";
    case LinkKind::offramp: return "offramp";
    case LinkKind::source: return "source";
    case LinkKind::sink: return "sink";
  }
  return "?";
}

LinkKind link_kind_from_string(const std::string& s) {
  if (s == "mainline") return LinkKind::mainline;
  if (s == "onramp") return LinkKind::onramp;
  if (s == "offramp") return LinkKind::offramp;
  if (s == "source") return LinkKind::source;
  if (s == "sink") return LinkKind::sink;
  throw std::invalid_argument("unknown link kind '" + s + "'");
}

int Network::density_slot_of(int link_id) const {
  const Link& link = link_by_id(link_id);
  if (link.density_slot < 0)
    throw std::invalid_argument("link " + std::to_string(link_id) +
                                " carries no density");
  return link.density_slot;
}

const Link& Network::link_by_id(int link_id) const {
  const auto it = id_to_link_.find(link_id);
  if (it == id_to_link_.end())
    throw std::invalid_argument("unknown link id " + std::to_string(link_id));
  return links_[it->second];
}

namespace {

[[noreturn]] void build_error(int link_id, const std::string& msg) {
  throw std::invalid_argument("link " + std::to_string(link_id) + ": " + msg);
}

}  // namespace

Network build_network(const CorridorSpec& spec, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");

  Network net;
  net.dt_ = dt;

  std::vector<const CorridorLink*> mains, ons, offs;
  for (const CorridorLink& cl : spec.links) {
    switch (cl.kind) {
      case LinkKind::mainline: mains.push_back(&cl); break;
      case LinkKind::onramp: ons.push_back(&cl); break;
      case LinkKind::offramp: offs.push_back(&cl); break;
      default:
        build_error(cl.id, "source/sink rows are synthesized, not listed");
    }
  }
  if (mains.empty())
    throw std::invalid_argument("corridor has no mainline links");

  const int n_nodes = static_cast<int>(mains.size()) - 1;

  auto add_density_link = [&](const CorridorLink& cl) -> int {
    if (net.id_to_link_.count(cl.id))
      build_error(cl.id, "duplicate link id");
    if (!(cl.length > 0.0)) build_error(cl.id, "length must be positive");
    FundamentalDiagram fd{cl.free_speed, cl.wave_speed, cl.jam_density};
    try {
      validate(fd);
    } catch (const std::exception& e) {
      build_error(cl.id, e.what());
    }
    if (fd.free_speed * dt > cl.length)
      build_error(cl.id, "CFL violation: free_speed*dt = " +
                             std::to_string(fd.free_speed * dt) +
                             " exceeds length " + std::to_string(cl.length));
    if (fd.wave_speed * dt > cl.length)
      build_error(cl.id, "CFL violation: wave_speed*dt = " +
                             std::to_string(fd.wave_speed * dt) +
                             " exceeds length " + std::to_string(cl.length));
    Link link;
    link.id = cl.id;
    link.kind = cl.kind;
    link.length = cl.length;
    link.fd = fd;
    const int idx = static_cast<int>(net.links_.size());
    net.links_.push_back(link);
    net.id_to_link_[cl.id] = idx;
    return idx;
  };

  for (const CorridorLink* cl : mains)
    net.mainline_.push_back(add_density_link(*cl));
  for (const CorridorLink* cl : ons) net.onramps_.push_back(add_density_link(*cl));
  for (const CorridorLink* cl : offs)
    net.offramps_.push_back(add_density_link(*cl));

  // One internal junction after each mainline link but the last.
  net.nodes_.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    Node& node = net.nodes_[i];
    node.id = i;
    node.kind = NodeKind::simple;
    node.upstream = net.mainline_[i];
    node.downstream = net.mainline_[i + 1];
  }

  auto attach_ramp = [&](const CorridorLink& cl, int link_index) {
    if (cl.at_node < 0 || cl.at_node >= n_nodes)
      build_error(cl.id, "dangling ramp: at_node " +
                             std::to_string(cl.at_node) +
                             " is not an internal junction (corridor has " +
                             std::to_string(n_nodes) + ")");
    Node& node = net.nodes_[cl.at_node];
    if (node.kind != NodeKind::simple)
      build_error(cl.id, "node " + std::to_string(cl.at_node) +
                             " already has a ramp attached");
    node.ramp = link_index;
    if (cl.kind == LinkKind::onramp) {
      node.kind = NodeKind::merge;
    } else {
      if (!(cl.split_ratio >= 0.0 && cl.split_ratio <= 1.0))
        build_error(cl.id, "split ratio must lie in [0,1]");
      node.kind = NodeKind::diverge;
      node.split_ratio = cl.split_ratio;
    }
  };

  for (std::size_t k = 0; k < ons.size(); ++k)
    attach_ramp(*ons[k], net.onramps_[k]);
  for (std::size_t k = 0; k < offs.size(); ++k)
    attach_ramp(*offs[k], net.offramps_[k]);

  for (const Node& node : net.nodes_)
    if (node.kind == NodeKind::diverge) ++net.diverge_count_;

  // Density slots: mainline first, then onramps, then offramps.
  auto assign_slot = [&](int link_index) {
    net.links_[link_index].density_slot =
        static_cast<int>(net.slot_links_.size());
    net.slot_links_.push_back(link_index);
  };
  for (int idx : net.mainline_) assign_slot(idx);
  for (int idx : net.onramps_) assign_slot(idx);
  for (int idx : net.offramps_) assign_slot(idx);

  // Boundary links: a queued source feeding the mainline head and each
  // onramp, and a sink behind the mainline tail and each offramp.
  int next_id = 0;
  for (const Link& link : net.links_) next_id = std::max(next_id, link.id + 1);
  auto add_boundary = [&](LinkKind kind, int queue_slot) {
    Link link;
    link.id = next_id++;
    link.kind = kind;
    link.length = 0.0;
    link.queue_slot = queue_slot;
    net.links_.push_back(link);
    net.id_to_link_[link.id] = static_cast<int>(net.links_.size()) - 1;
  };
  add_boundary(LinkKind::source, net.queue_count_++);
  for (std::size_t k = 0; k < net.onramps_.size(); ++k)
    add_boundary(LinkKind::source, net.queue_count_++);
  add_boundary(LinkKind::sink, -1);
  for (std::size_t k = 0; k < net.offramps_.size(); ++k)
    add_boundary(LinkKind::sink, -1);

  const int n_slots = net.density_count();
  net.free_speed_.resize(n_slots);
  net.wave_speed_.resize(n_slots);
  net.jam_density_.resize(n_slots);
  net.critical_.resize(n_slots);
  net.capacity_.resize(n_slots);
  net.length_.resize(n_slots);
  for (int s = 0; s < n_slots; ++s) {
    const Link& link = net.slot_link(s);
    const FundamentalDiagram& fd = *link.fd;
    net.free_speed_[s] = fd.free_speed;
    net.wave_speed_[s] = fd.wave_speed;
    net.jam_density_[s] = fd.jam_density;
    net.critical_[s] = ctmf::critical_density(fd);
    net.capacity_[s] = ctmf::capacity(fd);
    net.length_[s] = link.length;
  }
  return net;
}

namespace {

const char* kCorridorHeader = "id,kind,length_m,vf,w,rho_j,at_node,beta";

CorridorLink parse_corridor_row(const std::vector<std::string>& f) {
  using detail::parse_double;
  using detail::parse_int;
  CorridorLink cl;
  cl.id = parse_int(f[0], "id");
  cl.kind = link_kind_from_string(f[1]);
  cl.length = parse_double(f[2], "length_m");
  cl.free_speed = parse_double(f[3], "vf");
  cl.wave_speed = parse_double(f[4], "w");
  cl.jam_density = parse_double(f[5], "rho_j");
  const bool is_ramp =
      cl.kind == LinkKind::onramp || cl.kind == LinkKind::offramp;
  if (is_ramp) {
    cl.at_node = parse_int(f[6], "at_node");
  } else if (!f[6].empty()) {
    throw detail::RowError("at_node is only valid for ramps");
  }
  if (cl.kind == LinkKind::offramp) {
    cl.split_ratio = parse_double(f[7], "beta");
    if (!(cl.split_ratio >= 0.0 && cl.split_ratio <= 1.0))
      throw detail::RowError("beta must lie in [0,1]");
  } else if (!f[7].empty()) {
    throw detail::RowError("beta is only valid for offramps");
  }
  return cl;
}

}  // namespace

CorridorSpec parse_corridor(std::istream& in,
                            std::vector<std::string>* issues) {
  CorridorSpec spec;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    const std::string full = "line " + std::to_string(line_no) + ": " + msg;
    if (issues)
      issues->push_back(full);
    else
      throw std::invalid_argument("corridor: " + full);
  };

  if (!std::getline(in, line)) {
    fail("missing header");
    return spec;
  }
  line_no = 1;
  if (detail::trim(line) != kCorridorHeader) {
    fail("header must be '" + std::string(kCorridorHeader) + "'");
    return spec;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 8) {
      fail("expected 8 fields, got " + std::to_string(fields.size()));
      continue;
    }
    try {
      spec.links.push_back(parse_corridor_row(fields));
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  return spec;
}

CorridorSpec parse_corridor_file(const std::string& path,
                                 std::vector<std::string>* issues) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corridor file '" + path + "'");
  return parse_corridor(in, issues);
}

void write_corridor(const CorridorSpec& spec, std::ostream& out) {
  out << kCorridorHeader << "\n";
  char buf[256];
  for (const CorridorLink& cl : spec.links) {
    const bool is_ramp =
        cl.kind == LinkKind::onramp || cl.kind == LinkKind::offramp;
    std::snprintf(buf, sizeof(buf), "%d,%s,%.10g,%.10g,%.10g,%.10g", cl.id,
                  to_string(cl.kind), cl.length, cl.free_speed, cl.wave_speed,
                  cl.jam_density);
    out << buf;
    if (is_ramp)
      out << ',' << cl.at_node;
    else
      out << ',';
    if (cl.kind == LinkKind::offramp) {
      std::snprintf(buf, sizeof(buf), ",%.10g", cl.split_ratio);
      out << buf;
    } else {
      out << ',';
    }
    out << "\n";
  }
}

}  // namespace ctmf
