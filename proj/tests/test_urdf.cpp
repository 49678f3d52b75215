#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "taskopt/fixtures.hpp"
#include "taskopt/urdf.hpp"

using namespace taskopt;

namespace {

std::string wrap(const std::string & body) { return "<robot name=\"r\">" + body + "</robot>"; }

UrdfError::Kind parse_error_kind(const std::string & doc)
{
  try {
    parse_urdf(doc);
  } catch (const UrdfError & e) {
    return e.kind();
  }
  ADD_FAILURE() << "document parsed without error";
  return UrdfError::Kind::MalformedXml;
}

const char * kRevolute =
  R"(<joint name="j" type="revolute"><parent link="a"/><child link="b"/><axis xyz="0 0 2"/>)"
  R"(<limit lower="-1" upper="1" velocity="3"/></joint>)";

}  // namespace

TEST(Urdf, Planar2rFixture)
{
  const UrdfModel m = parse_urdf(fixtures::planar_2r);
  EXPECT_EQ(m.name, "planar_2r");
  EXPECT_EQ(m.root, "base");
  EXPECT_EQ(m.links.size(), 4u);
  int actuated = 0;
  for (const auto & j : m.joints) { actuated += j.actuated() ? 1 : 0; }
  EXPECT_EQ(actuated, 2);
  const UrdfJoint & j2 = m.joint("joint2");
  EXPECT_EQ(j2.type, JointType::Revolute);
  EXPECT_EQ(j2.xyz, Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(j2.axis, Eigen::Vector3d(0, 0, 1));
  EXPECT_DOUBLE_EQ(j2.lower, -M_PI);
  EXPECT_DOUBLE_EQ(j2.velocity, 2.0);
}

TEST(Urdf, DefaultsAndNormalization)
{
  const UrdfModel m = parse_urdf(wrap(R"(<link name="a"/><link name="b"/>)" + std::string(kRevolute)));
  const UrdfJoint & j = m.joint("j");
  EXPECT_EQ(j.xyz, Eigen::Vector3d::Zero());
  EXPECT_EQ(j.rpy, Eigen::Vector3d::Zero());
  EXPECT_NEAR(j.axis.norm(), 1.0, 1e-15);
  EXPECT_EQ(j.axis, Eigen::Vector3d(0, 0, 1));

  const UrdfModel d = parse_urdf(wrap(R"(<link name="a"><visual><geometry><box size="1 1 1"/></geometry></visual></link>
    <link name="b"/><joint name="c" type="continuous"><parent link="a"/><child link="b"/></joint>)"));
  const UrdfJoint & c = d.joint("c");
  EXPECT_EQ(c.axis, Eigen::Vector3d::UnitX());
  EXPECT_TRUE(std::isinf(c.lower) && c.lower < 0);
  EXPECT_TRUE(std::isinf(c.upper) && c.upper > 0);
}

TEST(Urdf, Errors)
{
  using K = UrdfError::Kind;
  EXPECT_EQ(parse_error_kind("<robot><link name=\"a\"></robot>"), K::MalformedXml);
  EXPECT_EQ(parse_error_kind(wrap(R"(<link name="a"/><link name="b"/>
    <joint name="f" type="floating"><parent link="a"/><child link="b"/></joint>)")),
            K::UnsupportedJoint);
  EXPECT_EQ(parse_error_kind(wrap(R"(<link name="a"/><link name="b"/>
    <joint name="f" type="planar"><parent link="a"/><child link="b"/></joint>)")),
            K::UnsupportedJoint);
  EXPECT_EQ(parse_error_kind(wrap(R"(<link name="a"/><link name="b"/>)")), K::MultipleRoots);
  EXPECT_EQ(parse_error_kind(wrap(R"(<link name="a"/><link name="b"/><link name="c"/>
    <joint name="j1" type="fixed"><parent link="b"/><child link="c"/></joint>
    <joint name="j2" type="fixed"><parent link="c"/><child link="b"/></joint>)")),
            K::Cycle);
  EXPECT_EQ(parse_error_kind(wrap(R"(<link name="a"/>
    <joint name="j" type="fixed"><parent link="a"/><child link="ghost"/></joint>)")),
            K::DanglingReference);
  EXPECT_EQ(parse_error_kind(wrap(R"(<link name="a"/><link name="b"/>
    <joint name="j" type="revolute"><parent link="a"/><child link="b"/></joint>)")),
            K::MissingLimits);
  EXPECT_EQ(parse_error_kind(wrap(R"(<link name="a"/><link name="b"/>
    <joint name="j" type="revolute"><parent link="a"/><child link="b"/><limit lower="1" upper="-1"/></joint>)")),
            K::InvalidLimits);
  EXPECT_EQ(parse_error_kind(wrap(R"(<link name="a"/><link name="b"/>
    <joint name="j" type="fixed"><parent link="a"/><child link="b"/><origin xyz="1 x 0"/></joint>)")),
            K::MalformedNumber);
  EXPECT_EQ(parse_error_kind(wrap(R"(<link name="a"/><link name="b"/>
    <joint name="j" type="revolute"><parent link="a"/><child link="b"/><mimic joint="x"/>
    <limit lower="0" upper="1"/></joint>)")),
            K::UnsupportedJoint);
}

TEST(Urdf, SerializationRoundTrip)
{
  for (const auto doc : {fixtures::planar_2r, fixtures::arm6, fixtures::prismatic3}) {
    const UrdfModel m = parse_urdf(doc);
    EXPECT_EQ(parse_urdf(to_urdf(m)), m);
  }
}

TEST(Urdf, ExtractChain)
{
  const UrdfModel m = parse_urdf(fixtures::planar_2r);
  const auto chain = extract_chain(m, "base", "ee");
  ASSERT_EQ(chain.size(), 3u);
  const auto actuated = actuated_joints(chain);
  ASSERT_EQ(actuated.size(), 2u);
  EXPECT_EQ(actuated[0].name, "joint1");
  EXPECT_EQ(actuated[1].name, "joint2");
  EXPECT_TRUE(extract_chain(m, "link1", "link1").empty());
  EXPECT_EQ(extract_chain(m, "link1", "ee").front().name, "joint2");
  EXPECT_THROW(extract_chain(m, "base", "nowhere"), LookupError);
  EXPECT_THROW(extract_chain(m, "link2", "link1"), StructureError);
}

TEST(Urdf, ExtractChainRejectsOtherBranch)
{
  const UrdfModel m = parse_urdf(wrap(R"(<link name="root"/><link name="l"/><link name="r"/>
    <joint name="jl" type="fixed"><parent link="root"/><child link="l"/></joint>
    <joint name="jr" type="fixed"><parent link="root"/><child link="r"/></joint>)"));
  EXPECT_THROW(extract_chain(m, "l", "r"), StructureError);
  EXPECT_EQ(extract_chain(m, "root", "r").size(), 1u);
}

TEST(Urdf, LoadBuiltinAndMissingFile)
{
  EXPECT_EQ(fixtures::load("builtin:arm6").joints.size(), 7u);
  EXPECT_THROW(fixtures::load("builtin:nope"), LookupError);
  EXPECT_THROW(fixtures::load("/nonexistent/robot.urdf"), LookupError);
}
