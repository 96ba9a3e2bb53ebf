from reserve_flow.flow import FlowMethod, FlowSolver, flow, flow_increment_bounds
