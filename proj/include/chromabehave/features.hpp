#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chromabehave/conical.hpp"
#include "chromabehave/ingest.hpp"

namespace chromabehave::features {

inline constexpr std::size_t kFeatureCount = 25;
using FeatureVector = std::array<double, kFeatureCount>;

/// Column codenames in the fixed feature order (the features CSV contract).
extern const std::array<std::string_view, kFeatureCount> kFeatureNames;
int feature_index(std::string_view codename);

/// Positions of a few features other modules refer to by role.
namespace idx {
inline constexpr std::size_t kFirstLogon = 0;
inline constexpr std::size_t kLastLogon = 1;
inline constexpr std::size_t kFpv = 14;
inline constexpr std::size_t kFpvAfter = 15;
inline constexpr std::size_t kSupervisorRecipients = 17;
inline constexpr std::size_t kCcDisgruntled = 21;
inline constexpr std::size_t kCcJob = 22;
inline constexpr std::size_t kCcWikileaks = 23;
inline constexpr std::size_t kCcKeylogger = 24;
}  // namespace idx

/// Office hours as minutes after local midnight; default 07:00 to 19:00.
/// A timestamp is inside office hours when start <= t < end.
struct OfficeHoursConfig {
  double start = 7 * 60;
  double end = 19 * 60;

  bool outside(double minute_of_day) const { return minute_of_day < start || minute_of_day >= end; }
  void validate() const;
};

/// Organization file tree for one day: root, one child per machine, then
/// directories, with files as leaves. All edges have unit weight.
class FileTree {
 public:
  using NodeId = int;
  static constexpr NodeId kRoot = 0;

  FileTree();
  static FileTree build(std::span<const std::pair<std::string, std::string>> machine_paths);

  /// Adds `machine` + the components of `path`; returns the leaf id.
  NodeId insert(std::string_view machine, std::string_view path);
  std::optional<NodeId> find_leaf(std::string_view machine, std::string_view path) const;

  bool is_leaf(NodeId n) const;
  int depth(NodeId n) const { return nodes_.at(static_cast<std::size_t>(n)).depth; }
  NodeId parent(NodeId n) const { return nodes_.at(static_cast<std::size_t>(n)).parent; }
  NodeId lca(NodeId a, NodeId b) const;
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaf_index_.size(); }
  std::vector<NodeId> neighbors(NodeId n) const;

 private:
  struct Node {
    NodeId parent = -1;
    int depth = 0;
    bool leaf = false;
    std::map<std::string, NodeId, std::less<>> children;
  };
  std::vector<Node> nodes_;
  std::unordered_map<std::string, NodeId> leaf_index_;
};

std::vector<std::string> split_path(std::string_view path);

/// Dist(root,i) + Dist(root,j) - 2 Dist(root,lca(i,j)). Throws UnknownLeaf.
int path_distance(const FileTree& tree, FileTree::NodeId i, FileTree::NodeId j);

/// Mean squared pairwise leaf distance over the distinct accessed leaves,
///   sum_{i != j} d_ij^2 / (2N^2 - N),
/// and 0 when fewer than two distinct leaves were accessed.
double file_path_variance(const FileTree& tree, std::span<const FileTree::NodeId> accessed);

enum class Label { Benign = 0, Scenario1 = 1, Scenario2 = 2, Scenario3 = 3 };
std::string_view label_name(Label l);
Label label_from_name(std::string_view name);
inline bool is_malicious(Label l) { return l != Label::Benign; }

struct UserDayFeatures {
  std::string user;
  Date date;
  FeatureVector f{};
};

struct LabeledDay {
  UserDayFeatures day;
  Label label = Label::Benign;
  bool malicious() const { return is_malicious(label); }
};

/// Everything shared by the users of one organization day.
struct OrgDay {
  Date date;
  FileTree tree;
  /// Sent emails keyed by lowercase sender address.
  std::unordered_map<std::string, std::vector<const ingest::EmailSend*>> emails_by_sender;

  static OrgDay build(Date date, std::span<const ingest::LogEvent* const> events);
};

/// Memo of detector verdicts per distinct text; not thread-safe.
class TextVerdictCache {
 public:
  bool classify(const conical::ConicalModel& model, conical::Topic topic, const std::string& text);

 private:
  std::array<std::unordered_map<std::string, bool>, 4> memo_;
};

struct FeatureContext {
  OfficeHoursConfig office;
  std::string org_domain = "dtaa.com";
  const conical::TopicDetectors* detectors = nullptr;
  /// user id -> LDAP record (for supervisor lookup); may be empty.
  const std::unordered_map<std::string, ingest::LdapRecord>* directory = nullptr;
  TextVerdictCache* cache = nullptr;
};

std::string email_address_of(const std::string& user, const FeatureContext& ctx);

/// Computes the 25 behavior features for one user-day.
UserDayFeatures extract_features(const std::string& user, Date date,
                                 std::span<const ingest::LogEvent* const> events, const OrgDay& org,
                                 const FeatureContext& ctx);

/// Runs extraction over every user-day in the store. Labels default to benign
/// unless present in `labels`.
std::vector<LabeledDay> extract_all(const ingest::EventStore& store, const std::vector<ingest::LdapRecord>& ldap,
                                    const conical::TopicDetectors& detectors, const FeatureContext& base,
                                    const std::map<std::pair<std::string, std::int32_t>, Label>& labels = {});

void write_features_csv(std::ostream& out, const std::vector<LabeledDay>& days, bool with_label = true);
std::vector<LabeledDay> read_features_csv(std::istream& in);

/// labels.csv: user,date,scenario (scenario in {benign, scenario1..3}).
std::map<std::pair<std::string, std::int32_t>, Label> read_labels_csv(std::istream& in);
void write_labels_csv(std::ostream& out, const std::map<std::pair<std::string, std::int32_t>, Label>& labels);

std::string format_double(double v);

}  // namespace chromabehave::features
