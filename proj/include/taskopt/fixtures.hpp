#pragma once

/**
 * @file
 * @brief Bundled robot descriptions so that every command runs without external assets.
 *
 * planar_2r: two revolute z joints with unit links; tip link "ee".
 * arm6: six-joint spatial arm (z-y-y-z-y-z), shoulder at height 0.3, reach 0.9; tip link "ee".
 * prismatic3: Cartesian x-y-z gantry; tip link "ee".
 */

#include <string>
#include <string_view>

#include "taskopt/error.hpp"
#include "taskopt/urdf.hpp"

namespace taskopt::fixtures {

inline constexpr std::string_view planar_2r = R"(<?xml version="1.0"?>
<robot name="planar_2r">
  <link name="base"/>
  <link name="link1"/>
  <link name="link2"/>
  <link name="ee"/>
  <joint name="joint1" type="revolute">
    <parent link="base"/>
    <child link="link1"/>
    <origin xyz="0 0 0" rpy="0 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-3.141592653589793" upper="3.141592653589793" velocity="2.0" effort="10"/>
  </joint>
  <joint name="joint2" type="revolute">
    <parent link="link1"/>
    <child link="link2"/>
    <origin xyz="1 0 0" rpy="0 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-3.141592653589793" upper="3.141592653589793" velocity="2.0" effort="10"/>
  </joint>
  <joint name="ee_joint" type="fixed">
    <parent link="link2"/>
    <child link="ee"/>
    <origin xyz="1 0 0" rpy="0 0 0"/>
  </joint>
</robot>
)";

inline constexpr std::string_view arm6 = R"(<?xml version="1.0"?>
<robot name="arm6">
  <link name="base"/>
  <link name="link1"/>
  <link name="link2"/>
  <link name="link3"/>
  <link name="link4"/>
  <link name="link5"/>
  <link name="link6"/>
  <link name="ee"/>
  <joint name="joint1" type="revolute">
    <parent link="base"/>
    <child link="link1"/>
    <origin xyz="0 0 0.1" rpy="0 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-2.9" upper="2.9" velocity="2.0" effort="50"/>
  </joint>
  <joint name="joint2" type="revolute">
    <parent link="link1"/>
    <child link="link2"/>
    <origin xyz="0 0 0.2" rpy="0 0 0"/>
    <axis xyz="0 1 0"/>
    <limit lower="-2.0" upper="2.0" velocity="2.0" effort="50"/>
  </joint>
  <joint name="joint3" type="revolute">
    <parent link="link2"/>
    <child link="link3"/>
    <origin xyz="0 0 0.4" rpy="0 0 0"/>
    <axis xyz="0 1 0"/>
    <limit lower="-2.6" upper="2.6" velocity="2.0" effort="30"/>
  </joint>
  <joint name="joint4" type="revolute">
    <parent link="link3"/>
    <child link="link4"/>
    <origin xyz="0 0 0.2" rpy="0 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-2.9" upper="2.9" velocity="2.5" effort="20"/>
  </joint>
  <joint name="joint5" type="revolute">
    <parent link="link4"/>
    <child link="link5"/>
    <origin xyz="0 0 0.2" rpy="0 0 0"/>
    <axis xyz="0 1 0"/>
    <limit lower="-2.0" upper="2.0" velocity="2.5" effort="20"/>
  </joint>
  <joint name="joint6" type="revolute">
    <parent link="link5"/>
    <child link="link6"/>
    <origin xyz="0 0 0" rpy="0 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="-2.9" upper="2.9" velocity="3.0" effort="10"/>
  </joint>
  <joint name="ee_joint" type="fixed">
    <parent link="link6"/>
    <child link="ee"/>
    <origin xyz="0 0 0.1" rpy="0 0 0"/>
  </joint>
</robot>
)";

inline constexpr std::string_view prismatic3 = R"(<?xml version="1.0"?>
<robot name="prismatic3">
  <link name="base"/>
  <link name="carriage_x"/>
  <link name="carriage_y"/>
  <link name="carriage_z"/>
  <link name="ee"/>
  <joint name="slide_x" type="prismatic">
    <parent link="base"/>
    <child link="carriage_x"/>
    <axis xyz="1 0 0"/>
    <limit lower="-1" upper="1" velocity="0.5" effort="100"/>
  </joint>
  <joint name="slide_y" type="prismatic">
    <parent link="carriage_x"/>
    <child link="carriage_y"/>
    <axis xyz="0 1 0"/>
    <limit lower="-1" upper="1" velocity="0.5" effort="100"/>
  </joint>
  <joint name="slide_z" type="prismatic">
    <parent link="carriage_y"/>
    <child link="carriage_z"/>
    <origin xyz="0 0 0.5" rpy="0 0 0"/>
    <axis xyz="0 0 1"/>
    <limit lower="0" upper="0.5" velocity="0.5" effort="100"/>
  </joint>
  <joint name="tool" type="fixed">
    <parent link="carriage_z"/>
    <child link="ee"/>
    <origin xyz="0 0 -0.1" rpy="0 0 0"/>
  </joint>
</robot>
)";

/// Look up a bundled description by name ("planar_2r", "arm6", "prismatic3").
inline std::string_view by_name(const std::string & name)
{
  if (name == "planar_2r") { return planar_2r; }
  if (name == "arm6") { return arm6; }
  if (name == "prismatic3") { return prismatic3; }
  throw LookupError("no bundled robot named '" + name + "'");
}

/// Load "builtin:<name>" from the bundled set, anything else from disk.
inline UrdfModel load(const std::string & source)
{
  constexpr std::string_view prefix = "builtin:";
  if (source.rfind(prefix, 0) == 0) { return parse_urdf(by_name(source.substr(prefix.size()))); }
  return load_urdf(source);
}

}  // namespace taskopt::fixtures
