#pragma once

/**
 * @file
 * @brief URDF subset parser: robot, link and joint elements with origin, axis, limit, parent
 * and child. Visual, collision and inertial data are ignored.
 */

#include <Eigen/Core>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <locale>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "taskopt/error.hpp"

namespace taskopt {

class UrdfError : public Error
{
public:
  enum class Kind {
    MalformedXml,
    MalformedNumber,
    UnsupportedJoint,
    MissingAttribute,
    DuplicateName,
    MultipleRoots,
    MultipleParents,
    Cycle,
    DanglingReference,
    MissingLimits,
    InvalidLimits,
    InvalidAxis,
  };

  UrdfError(Kind kind, const std::string & what) : Error("urdf: " + what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

enum class JointType { Fixed, Revolute, Continuous, Prismatic };

inline const char * to_string(JointType t) noexcept
{
  switch (t) {
  case JointType::Fixed: return "fixed";
  case JointType::Revolute: return "revolute";
  case JointType::Continuous: return "continuous";
  default: return "prismatic";
  }
}

struct UrdfJoint
{
  std::string name;
  JointType type = JointType::Fixed;
  std::string parent;
  std::string child;
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  Eigen::Vector3d rpy = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  double velocity = std::numeric_limits<double>::infinity();

  bool actuated() const noexcept { return type != JointType::Fixed; }

  bool operator==(const UrdfJoint &) const = default;
};

struct UrdfModel
{
  std::string name;
  std::vector<std::string> links;  // document order
  std::vector<UrdfJoint> joints;   // document order
  std::string root;

  bool has_link(const std::string & link) const
  {
    for (const auto & l : links) {
      if (l == link) { return true; }
    }
    return false;
  }

  /// Joint whose child is link, or nullptr for the root.
  const UrdfJoint * parent_joint(const std::string & link) const
  {
    for (const auto & j : joints) {
      if (j.child == link) { return &j; }
    }
    return nullptr;
  }

  const UrdfJoint & joint(const std::string & name) const
  {
    for (const auto & j : joints) {
      if (j.name == name) { return j; }
    }
    throw LookupError("no joint named '" + name + "'");
  }

  bool operator==(const UrdfModel &) const = default;
};

namespace detail {

namespace pt = boost::property_tree;

inline Eigen::Vector3d parse_triple(const std::string & text, const std::string & where)
{
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!(in >> v(i))) { throw UrdfError(UrdfError::Kind::MalformedNumber, "expected three numbers in " + where); }
  }
  std::string rest;
  if (in >> rest) { throw UrdfError(UrdfError::Kind::MalformedNumber, "trailing text in " + where); }
  return v;
}

inline double parse_number(const std::string & text, const std::string & where)
{
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  double v = 0.0;
  std::string rest;
  if (!(in >> v) || (in >> rest)) {
    throw UrdfError(UrdfError::Kind::MalformedNumber, "expected a number in " + where);
  }
  return v;
}

inline std::optional<std::string> attribute(const pt::ptree & element, const char * name)
{
  if (const auto attrs = element.get_child_optional("<xmlattr>")) {
    if (const auto v = attrs->get_optional<std::string>(name)) { return *v; }
  }
  return std::nullopt;
}

inline std::string required_attribute(const pt::ptree & element, const char * name, const std::string & where)
{
  if (auto v = attribute(element, name)) { return *v; }
  throw UrdfError(UrdfError::Kind::MissingAttribute, where + " is missing attribute '" + name + "'");
}

inline UrdfJoint parse_joint(const pt::ptree & element)
{
  UrdfJoint j;
  j.name = required_attribute(element, "name", "joint");
  const std::string where = "joint '" + j.name + "'";
  const std::string type = required_attribute(element, "type", where);
  if (type == "fixed") {
    j.type = JointType::Fixed;
  } else if (type == "revolute") {
    j.type = JointType::Revolute;
  } else if (type == "continuous") {
    j.type = JointType::Continuous;
  } else if (type == "prismatic") {
    j.type = JointType::Prismatic;
  } else {
    throw UrdfError(UrdfError::Kind::UnsupportedJoint, where + " has unsupported type '" + type + "'");
  }
  if (element.get_child_optional("mimic")) {
    throw UrdfError(UrdfError::Kind::UnsupportedJoint, where + " uses mimic, which is not supported");
  }

  const auto parent = element.get_child_optional("parent");
  const auto child = element.get_child_optional("child");
  if (!parent || !child) { throw UrdfError(UrdfError::Kind::MissingAttribute, where + " needs parent and child"); }
  j.parent = required_attribute(*parent, "link", where + " parent");
  j.child = required_attribute(*child, "link", where + " child");

  if (const auto origin = element.get_child_optional("origin")) {
    if (auto xyz = attribute(*origin, "xyz")) { j.xyz = parse_triple(*xyz, where + " origin xyz"); }
    if (auto rpy = attribute(*origin, "rpy")) { j.rpy = parse_triple(*rpy, where + " origin rpy"); }
  }
  if (const auto axis = element.get_child_optional("axis")) {
    if (auto xyz = attribute(*axis, "xyz")) { j.axis = parse_triple(*xyz, where + " axis"); }
  }
  const double norm = j.axis.norm();
  if (!(norm > 1e-12) || !std::isfinite(norm)) {
    throw UrdfError(UrdfError::Kind::InvalidAxis, where + " has a zero-length axis");
  }
  j.axis /= norm;

  const auto limit = element.get_child_optional("limit");
  if (limit) {
    if (auto v = attribute(*limit, "velocity")) { j.velocity = std::abs(parse_number(*v, where + " velocity")); }
  }
  if (j.type == JointType::Revolute || j.type == JointType::Prismatic) {
    if (!limit) { throw UrdfError(UrdfError::Kind::MissingLimits, where + " requires a <limit> element"); }
    j.lower = parse_number(attribute(*limit, "lower").value_or("0"), where + " lower limit");
    j.upper = parse_number(attribute(*limit, "upper").value_or("0"), where + " upper limit");
    if (!(j.lower <= j.upper)) { throw UrdfError(UrdfError::Kind::InvalidLimits, where + " has lower > upper"); }
  }
  return j;
}

}  // namespace detail

/**
 * @brief Parse and validate a URDF document.
 *
 * The joints must form a tree: one root link, one parent joint per other link, no cycles and
 * no references to undeclared links.
 */
inline UrdfModel parse_urdf(std::string_view document)
{
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(document)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error & e) {
    throw UrdfError(UrdfError::Kind::MalformedXml, e.what());
  }
  const auto robot = tree.get_child_optional("robot");
  if (!robot) { throw UrdfError(UrdfError::Kind::MalformedXml, "missing <robot> element"); }

  UrdfModel model;
  model.name = detail::attribute(*robot, "name").value_or("");
  std::set<std::string> link_names;
  std::set<std::string> joint_names;
  for (const auto & [tag, element] : *robot) {
    if (tag == "link") {
      std::string name = detail::required_attribute(element, "name", "link");
      if (!link_names.insert(name).second) {
        throw UrdfError(UrdfError::Kind::DuplicateName, "link '" + name + "' is declared twice");
      }
      model.links.push_back(std::move(name));
    } else if (tag == "joint") {
      UrdfJoint j = detail::parse_joint(element);
      if (!joint_names.insert(j.name).second) {
        throw UrdfError(UrdfError::Kind::DuplicateName, "joint '" + j.name + "' is declared twice");
      }
      model.joints.push_back(std::move(j));
    }
  }
  if (model.links.empty()) { throw UrdfError(UrdfError::Kind::MalformedXml, "robot has no links"); }

  std::map<std::string, std::string> parent_of;
  for (const auto & j : model.joints) {
    for (const auto * link : {&j.parent, &j.child}) {
      if (!link_names.count(*link)) {
        throw UrdfError(UrdfError::Kind::DanglingReference, "joint '" + j.name + "' references unknown link '" + *link + "'");
      }
    }
    if (!parent_of.emplace(j.child, j.parent).second) {
      throw UrdfError(UrdfError::Kind::MultipleParents, "link '" + j.child + "' has more than one parent joint");
    }
  }

  std::vector<std::string> roots;
  for (const auto & l : model.links) {
    if (!parent_of.count(l)) { roots.push_back(l); }
  }
  if (roots.empty()) { throw UrdfError(UrdfError::Kind::Cycle, "every link has a parent; the joints form a cycle"); }
  if (roots.size() > 1) {
    throw UrdfError(UrdfError::Kind::MultipleRoots, "links '" + roots[0] + "' and '" + roots[1] + "' both lack a parent");
  }
  model.root = roots.front();

  // With a single root and one parent per link, any link unreachable from the root sits on a cycle.
  std::multimap<std::string, std::string> children;
  for (const auto & [child, parent] : parent_of) { children.emplace(parent, child); }
  std::set<std::string> reached{model.root};
  std::vector<std::string> stack{model.root};
  while (!stack.empty()) {
    const std::string link = stack.back();
    stack.pop_back();
    const auto [lo, hi] = children.equal_range(link);
    for (auto it = lo; it != hi; ++it) {
      if (reached.insert(it->second).second) { stack.push_back(it->second); }
    }
  }
  if (reached.size() != link_names.size()) {
    throw UrdfError(UrdfError::Kind::Cycle, "some links are not connected to root '" + model.root + "'");
  }
  return model;
}

inline UrdfModel load_urdf(const std::string & path)
{
  std::ifstream in(path);
  if (!in) { throw LookupError("cannot open URDF file '" + path + "'"); }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_urdf(text.str());
}

/// Serialize the supported subset back to URDF XML.
inline std::string to_urdf(const UrdfModel & m)
{
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  auto triple = [&](const Eigen::Vector3d & v) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s.precision(17);
    s << v.x() << ' ' << v.y() << ' ' << v.z();
    return s.str();
  };
  out << "<?xml version=\"1.0\"?>\n<robot name=\"" << m.name << "\">\n";
  for (const auto & l : m.links) { out << "  <link name=\"" << l << "\"/>\n"; }
  for (const auto & j : m.joints) {
    out << "  <joint name=\"" << j.name << "\" type=\"" << to_string(j.type) << "\">\n"
        << "    <parent link=\"" << j.parent << "\"/>\n"
        << "    <child link=\"" << j.child << "\"/>\n"
        << "    <origin xyz=\"" << triple(j.xyz) << "\" rpy=\"" << triple(j.rpy) << "\"/>\n"
        << "    <axis xyz=\"" << triple(j.axis) << "\"/>\n";
    const bool bounded = j.type == JointType::Revolute || j.type == JointType::Prismatic;
    if (bounded || std::isfinite(j.velocity)) {
      out << "    <limit";
      if (bounded) { out << " lower=\"" << j.lower << "\" upper=\"" << j.upper << "\""; }
      if (std::isfinite(j.velocity)) { out << " velocity=\"" << j.velocity << "\""; }
      out << "/>\n";
    }
    out << "  </joint>\n";
  }
  out << "</robot>\n";
  return out.str();
}

/**
 * @brief Joints on the path from base to tip, in base-to-tip order, fixed joints included.
 *
 * Throws LookupError for an unknown link and StructureError when tip is not below base.
 */
inline std::vector<UrdfJoint> extract_chain(const UrdfModel & m, const std::string & base, const std::string & tip)
{
  for (const auto * link : {&base, &tip}) {
    if (!m.has_link(*link)) { throw LookupError("no link named '" + *link + "'"); }
  }
  std::vector<UrdfJoint> reversed;
  std::string link = tip;
  while (link != base) {
    const UrdfJoint * j = m.parent_joint(link);
    if (!j) { throw StructureError("link '" + tip + "' is not in the subtree of '" + base + "'"); }
    reversed.push_back(*j);
    link = j->parent;
  }
  return {reversed.rbegin(), reversed.rend()};
}

/// The actuated (non-fixed) subset of a chain.
inline std::vector<UrdfJoint> actuated_joints(const std::vector<UrdfJoint> & chain)
{
  std::vector<UrdfJoint> out;
  for (const auto & j : chain) {
    if (j.actuated()) { out.push_back(j); }
  }
  return out;
}

}  // namespace taskopt
