#pragma once

namespace toss {

// Bump on any change that alters simulated trajectories or file layouts.
inline constexpr int kLogSchemaVersion = 1;
inline constexpr int kPhysicsVersion = 1;
inline constexpr int kCheckpointVersion = 1;

}  // namespace toss
