export {
  GreenListRule,
  PartitionMode,
  greenMask,
  greenMembership,
  mix64,
  pairHashUnit,
  unitStream,
} from './hash.js';
export {
  DEFAULT_CONFIG,
  ModelConfig,
  generateTokens,
  judgePair,
  parseRule,
  rawPreference,
  tokenize,
} from './model.js';
export * from './protocol.js';
export { handleRequest, runHttpServer, runStdioServer } from './serve.js';
