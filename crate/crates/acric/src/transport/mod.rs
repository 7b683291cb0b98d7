//! Frame codec and simulated bus where secured and plain devices coexist.

mod bus;
mod device;
mod frame;
mod scenario;
mod tcp;

pub use bus::{Bus, DeliveryPolicy, SendOp, TraceEvent, TraceLog, WireTap};
pub use device::{Device, PlainCrc, ReceiveOutcome, RejectReason, TransportError};
pub use frame::{Frame, FrameError, BROADCAST_ADDRESS, MAX_FRAME_LEN, MAX_PAYLOAD, MIN_FRAME_LEN};
pub use scenario::{BusScenario, DeviceSpec, ModeSpec, ScenarioError, TrafficSpec};
pub use tcp::FramedTcp;
