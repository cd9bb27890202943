#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctmf/fundamental_diagram.hpp"

namespace ctmf {

enum class LinkKind { mainline, onramp, offramp, source, sink };

const char* to_string(LinkKind kind);
LinkKind link_kind_from_string(const std::string& s);

struct Link {
  int id = -1;
  LinkKind kind = LinkKind::mainline;
  double length = 0.0;                   // m
  std::optional<FundamentalDiagram> fd;  // absent for source and sink
  int density_slot = -1;                 // row in density vectors; -1 if none
  int queue_slot = -1;                   // row in the queue vector; sources only
};

enum class NodeKind { simple, merge, diverge };

struct Node {
  int id = -1;          // junction position along the mainline, upstream first
  NodeKind kind = NodeKind::simple;
  int upstream = -1;    // index into links(): mainline link entering the node
  int downstream = -1;  // index into links(): mainline link leaving the node
  int ramp = -1;        // index into links(): onramp (merge) / offramp (diverge)
  double split_ratio = 0.0;  // diverge only: fraction exiting to the offramp
};

/// One row of a corridor description. Mainline rows must appear in
/// upstream-to-downstream order; ramp rows name the junction they attach to.
struct CorridorLink {
  int id = -1;
  LinkKind kind = LinkKind::mainline;
  double length = 0.0;
  double free_speed = 0.0;
  double wave_speed = 0.0;
  double jam_density = 0.0;
  int at_node = -1;  // ramps: junction index (node i sits after mainline row i)
  double split_ratio = std::numeric_limits<double>::quiet_NaN();  // offramps
};

struct CorridorSpec {
  std::vector<CorridorLink> links;
};

/// Immutable corridor topology plus per-link flux parameters. Density-carrying
/// links (mainline, onramp, offramp) occupy contiguous slots: mainline links
/// in order, then onramps, then offramps, each in corridor-file order. Source
/// links carry queue slots: the upstream boundary first, then one per onramp.
class Network {
 public:
  Network() = default;

  const std::vector<Link>& links() const { return links_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  double dt() const { return dt_; }

  int density_count() const { return static_cast<int>(slot_links_.size()); }
  int queue_count() const { return queue_count_; }
  int diverge_count() const { return diverge_count_; }

  const std::vector<int>& mainline() const { return mainline_; }
  const std::vector<int>& onramps() const { return onramps_; }
  const std::vector<int>& offramps() const { return offramps_; }

  /// Link array index behind each density slot.
  const std::vector<int>& slot_links() const { return slot_links_; }
  const Link& slot_link(int slot) const { return links_[slot_links_[slot]]; }

  // Slot-aligned parameter arrays.
  const Eigen::ArrayXd& free_speed() const { return free_speed_; }
  const Eigen::ArrayXd& wave_speed() const { return wave_speed_; }
  const Eigen::ArrayXd& jam_density() const { return jam_density_; }
  const Eigen::ArrayXd& critical_density() const { return critical_; }
  const Eigen::ArrayXd& capacity() const { return capacity_; }
  const Eigen::ArrayXd& length() const { return length_; }

  /// Density slot for a corridor link id; throws for unknown ids and for
  /// links that carry no density (source/sink).
  int density_slot_of(int link_id) const;
  bool has_link(int link_id) const { return id_to_link_.count(link_id) != 0; }
  const Link& link_by_id(int link_id) const;

  friend Network build_network(const CorridorSpec& spec, double dt);

 private:
  std::vector<Link> links_;
  std::vector<Node> nodes_;
  std::vector<int> mainline_, onramps_, offramps_;  // link array indices
  std::vector<int> slot_links_;
  std::map<int, int> id_to_link_;
  Eigen::ArrayXd free_speed_, wave_speed_, jam_density_, critical_, capacity_,
      length_;
  double dt_ = 0.0;
  int queue_count_ = 0;
  int diverge_count_ = 0;
};

/// Validates and assembles a corridor: infers node kinds from ramp
/// attachments, synthesizes boundary source/sink links, and checks the
/// CFL condition free_speed*dt <= length and wave_speed*dt <= length for
/// every density-carrying link. Errors cite the offending link id.
Network build_network(const CorridorSpec& spec, double dt);

/// Parses the corridor CSV (header: id,kind,length_m,vf,w,rho_j,at_node,beta).
/// With `issues` null the first malformed row throws; otherwise problems are
/// collected as "line N: ..." strings and offending rows skipped.
CorridorSpec parse_corridor(std::istream& in,
                            std::vector<std::string>* issues = nullptr);
CorridorSpec parse_corridor_file(const std::string& path,
                                 std::vector<std::string>* issues = nullptr);
void write_corridor(const CorridorSpec& spec, std::ostream& out);

}  // namespace ctmf
